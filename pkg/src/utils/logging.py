"""
Logging configuration for the multi-instance counterfactual toolkit.
Sets up structured logging with appropriate formatters and handlers.
"""
import contextlib
import logging
import sys
import time
from typing import Any, Iterator, Optional

import structlog
from structlog.types import Processor

from config.config import config


def configure_logging(level: Optional[int] = None) -> None:
    """
    Configure logging for the application.

    Args:
        level: Explicit log level; defaults to the configured LOG_LEVEL
    """
    # Set up standard logging; stdout is reserved for command results
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=level if level is not None else config.get_log_level(),
        force=True,
    )

    # Configure structlog
    shared_processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    if config.is_development:
        # Development: pretty console output
        processors = shared_processors + [
            structlog.dev.ConsoleRenderer()
        ]
    else:
        # Production: JSON lines
        processors = shared_processors + [
            structlog.processors.dict_tracebacks,
            structlog.processors.JSONRenderer()
        ]

    structlog.configure(
        processors=processors,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """
    Get a logger instance with the given name.

    Args:
        name: The name of the logger, typically __name__

    Returns:
        A configured structlog logger
    """
    return structlog.get_logger(name)


def new_run_id() -> str:
    """Generate a run identifier for log correlation."""
    return f"run_{int(time.time() * 1000)}"


@contextlib.contextmanager
def bound_run_context(**values: Any) -> Iterator[None]:
    """
    Bind run-scoped values (run id, fold, condition) to every log event
    emitted inside the block.
    """
    with structlog.contextvars.bound_contextvars(**values):
        yield
