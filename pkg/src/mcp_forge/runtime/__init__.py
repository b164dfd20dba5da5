from . import context, jobs, logging
from .context import task_context
from .jobs import JobLimiter, Lease, SingleFlight, default_job_count, map_ordered
from .logging import (
    LogContext,
    LoggedError,
    LogEvent,
    log,
    log_debug,
    log_error,
    log_exception,
    log_warning,
    start_logging,
    stop_logging,
)
from .loop import LoopError, run_loop

__all__ = [
    "context",
    "jobs",
    "logging",
    "task_context",
    "JobLimiter",
    "Lease",
    "SingleFlight",
    "default_job_count",
    "map_ordered",
    "LogContext",
    "LogEvent",
    "LoggedError",
    "log",
    "log_debug",
    "log_warning",
    "log_error",
    "log_exception",
    "start_logging",
    "stop_logging",
    "LoopError",
    "run_loop",
]
