"""Logging configuration for snapdiff."""

import logging
import sys

import structlog

from src.config.settings import settings


def setup_logging(level: str | None = None, fmt: str | None = None) -> structlog.stdlib.BoundLogger:
    """Configure structured logging for the process.

    Args:
        level: Log level name (defaults to settings.log_level)
        fmt: "json" or "console" (defaults to settings.log_format)

    Returns:
        The package root logger
    """
    level_name = (level or settings.log_level).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(numeric_level)
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(numeric_level)

    renderer = (
        structlog.processors.JSONRenderer()
        if (fmt or settings.log_format) == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.add_log_level,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

    return structlog.get_logger("snapdiff")


# Global logger instance
logger = setup_logging()
