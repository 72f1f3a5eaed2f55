"""Structured logging for solver and channel diagnostics."""
import logging
import sys

import structlog

from jfts_am.core.config import settings


# JSON lines on stderr; stdout carries CSV/JSON payloads
structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
        structlog.dev.set_exc_info,
        structlog.processors.JSONRenderer()
    ],
    wrapper_class=structlog.make_filtering_bound_logger(
        getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    ),
    context_class=dict,
    logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
    cache_logger_on_first_use=False,
)

logger = structlog.get_logger()


def bind_run_context(**fields) -> None:
    """
    Attach fields (seed, scenario, subcommand) to every later log line.

    Args:
        **fields: Context values merged by structlog.contextvars
    """
    structlog.contextvars.bind_contextvars(**fields)


def clear_run_context() -> None:
    """Drop all fields bound with bind_run_context."""
    structlog.contextvars.clear_contextvars()


def get_logger():
    """
    Get a structured logger instance.

    Returns:
        A structlog logger carrying the bound run context

    Example:
        ```python
        from jfts_am.observability.logging import get_logger

        logger = get_logger()
        logger.info("Plan solved", kind="arate_cpow_iber", iterations=7)
        ```
    """
    return structlog.get_logger()
