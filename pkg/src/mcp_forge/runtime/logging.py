from __future__ import annotations

import os
import time
import traceback
from dataclasses import dataclass, field
from typing import IO, Any, Callable, Literal, NoReturn, overload

import click

from .context import task_context

Level = Literal["debug", "info", "warning", "error"]

levels = ["debug", "info", "warning", "error"]

_level_order = {level: i for i, level in enumerate(levels)}


@dataclass
class LogEvent:
    msg: str
    level: Level
    scope: str | None = None
    work_dir: str | None = None
    app_name: str | None = None

    time: float = field(init=False)

    def __post_init__(self):
        self.time = time.time()


class LoggedError(Exception):
    event: LogEvent

    def __init__(self, event: LogEvent):
        self.event = event

    def __str__(self) -> str:
        return self.event.msg


def default_time_formatter(t: float) -> str:
    tm = time.localtime(t)
    return f"{tm.tm_hour:02d}:{tm.tm_min:02d}:{tm.tm_sec:02d}"


def default_formatter(event: LogEvent):
    time_str = LogContext.time_format(event.time)
    parts: list[str] = []
    if event.app_name:
        parts.append(f"{click.style(event.app_name, fg='blue')} ")
    parts.append(f"{click.style(time_str, fg='green')} ")
    if event.work_dir:
        parts.append(f"[{click.style(event.work_dir, fg='blue')}] ")
    if event.scope:
        parts.append(f"{click.style(event.scope, fg='magenta')}: ")

    prefix = "".join(parts)

    formatted_lines: list[str] = []

    for line in event.msg.splitlines():
        if event.level == "debug":
            formatted_lines.append(prefix + click.style(f"DEBUG: {line}", fg="cyan"))
        elif event.level == "warning":
            formatted_lines.append(prefix + click.style(f"WARNING: {line}", fg="yellow"))
        elif event.level == "error":
            formatted_lines.append(prefix + click.style(f"ERROR: {line}", fg="red"))
        else:
            formatted_lines.append(prefix + line)
    return "\n".join(formatted_lines)


@task_context
class LogContext:
    """Context variables to customize logging behavior.

    Values are looked up in the context of the code emitting the message, so a stage can set
    `scope` once and every worker it spawns inherits it, while a worker may narrow it further
    without affecting its siblings.
    """

    app_name: str | None = None
    """The default formatter will prefix all log messages with this if set."""

    work_dir: str | None = None
    """Working directory to display as part of log messages."""

    scope: str | None = None
    """Scope prefix to display as part of log messages."""

    quiet: bool = False
    """Downgrade all info level messages to debug level messages."""

    level: Level = "info"
    """The minimum log level to display/log."""

    log_format: Callable[[LogEvent], str] = default_formatter
    """The formatter used to format log messages."""

    time_format: Callable[[float], str] = default_time_formatter
    """The formatter used by the default formatter to format the time of log messages.

    Tests override this with a fixed timestamp.
    """


_handlers: list[Callable[[LogEvent], None]] = []


def log(*args: Any, level: Level = "info") -> LogEvent:
    """Produce log output.

    :param args: The message to log, will be converted to strings and joined with spaces.
    :param level: The log level, one of "debug", "info", "warning" or "error". Note that
        `log_error` will, by default, also raise an exception.
    :return: The emitted event.
    """
    msg = " ".join(str(arg) for arg in args)

    if LogContext.quiet and level == "info":
        level = "debug"

    event = LogEvent(
        msg=msg,
        level=level,
        scope=LogContext.scope,
        work_dir=LogContext.work_dir,
        app_name=LogContext.app_name,
    )

    if _level_order[event.level] >= _level_order[LogContext.level]:
        for handler in list(_handlers):
            handler(event)

    return event


def log_debug(*args: Any) -> LogEvent:
    """Produce debug log output."""
    return log(*args, level="debug")


def log_warning(*args: Any) -> LogEvent:
    """Produce warning log output."""
    return log(*args, level="warning")


@overload
def log_error(*args: Any, raise_error: Literal[True] = True) -> NoReturn:
    ...


@overload
def log_error(*args: Any, raise_error: Literal[False]) -> LogEvent:
    ...


def log_error(*args: Any, raise_error: bool = True) -> LogEvent:
    """Produce error log output and optionally raise a `LoggedError`."""
    event = log(*args, level="error")

    if raise_error:
        raise LoggedError(event)

    return event


_already_logged: dict[int, tuple[BaseException, LoggedError]] = {}


def log_exception(exception: BaseException, raise_error: bool = True) -> LoggedError:
    """Produce error log output for an exception and optionally raise a `LoggedError`.

    An exception is only logged once; logging it again returns (or raises) the same
    `LoggedError`.
    """
    if isinstance(exception, LoggedError):
        if raise_error:
            raise exception
        return exception

    try:
        found_key, found_value = _already_logged[id(exception)]
        if found_key is exception:
            if raise_error:
                raise found_value
            return found_value
    except KeyError:
        pass

    message = str(exception)

    if type(exception).__module__ == "builtins":
        short_trace = "".join(traceback.format_tb(exception.__traceback__, limit=-1))
        message = f"{type(exception).__name__}: {message}\n{short_trace}"

    err = LoggedError(log_error(message, raise_error=False))
    err.__cause__ = exception

    _already_logged[id(exception)] = exception, err

    if raise_error:
        raise err
    return err


_no_color = bool(os.getenv("NO_COLOR", ""))


def start_logging(
    file: IO[Any] | None = None, err: bool = False, color: bool | None = None
) -> Callable[[], None]:
    """Start writing log events to a destination.

    Can be called multiple times to log to multiple destinations. Closing ``file`` also stops
    logging to it.

    :param file: The file to log to. Defaults to `sys.stdout` or `sys.stderr` depending on ``err``.
    :param err: Whether to log to `sys.stderr` instead of `sys.stdout`.
    :param color: Whether to use colors. Defaults to ``True`` for terminals. Ignored when the
        ``NO_COLOR`` environment variable is set.
    :return: A callable that removes this destination again.
    """
    if _no_color:
        color = False

    def log_handler(event: LogEvent):
        if file and file.closed:
            stop()
            return
        formatted = LogContext.log_format(event)
        click.echo(formatted, file=file, err=err, color=color)

    def stop():
        if log_handler in _handlers:
            _handlers.remove(log_handler)

    _handlers.append(log_handler)
    return stop


def stop_logging() -> None:
    """Remove all log destinations."""
    _handlers.clear()
