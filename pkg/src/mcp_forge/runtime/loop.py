from __future__ import annotations

import asyncio
import signal
from typing import Awaitable, Callable, TypeVar

import click

from ..errors import ForgeError

T = TypeVar("T")


class LoopError(ForgeError):
    """Raised when the event loop is used in an invalid state."""


_running = False


def run_loop(main: Callable[[], T | Awaitable[T]], *, handle_sigint: bool = True) -> T:
    """Run ``main`` (sync or async) to completion on a fresh event loop and return its result.

    :param handle_sigint: Whether to handle SIGINT (Ctrl+C) by cancelling ``main`` after printing
        ``<Interrupted>`` instead of raising `KeyboardInterrupt` somewhere inside the loop.
    """
    global _running
    if _running:
        raise LoopError("an event loop is already running")
    _running = True

    async def wrapper() -> T:
        task = asyncio.current_task()
        loop = asyncio.get_running_loop()
        installed = False
        if handle_sigint and task is not None:

            def on_sigint() -> None:
                click.secho("<Interrupted>", err=True, fg="yellow")
                task.cancel()
                loop.remove_signal_handler(signal.SIGINT)

            try:
                loop.add_signal_handler(signal.SIGINT, on_sigint)
                installed = True
            except (NotImplementedError, RuntimeError, ValueError):
                # not available off the main thread or on some platforms
                pass
        try:
            result = main()
            if asyncio.iscoroutine(result) or isinstance(result, asyncio.Future):
                return await result  # type: ignore
            return result  # type: ignore
        finally:
            if installed:
                loop.remove_signal_handler(signal.SIGINT)

    try:
        return asyncio.run(wrapper())
    finally:
        _running = False
