"""
Logging configuration for the interaction toolkit.

Structured logging via structlog. Events are JSON by default and go to stderr,
leaving stdout to the command-line summaries.
"""

import logging
import sys
from typing import Any

import numpy as np
import structlog
from structlog.processors import JSONRenderer

from app.utils.settings import get_settings


def to_loggable(value: Any) -> Any:
    """
    Convert numpy values into plain Python values.

    Args:
        value: Any value attached to a log event

    Returns:
        JSON-serializable equivalent (arrays become nested lists)
    """
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [to_loggable(v) for v in value]
    if isinstance(value, dict):
        return {k: to_loggable(v) for k, v in value.items()}
    return value


def add_numpy_conversion(
    logger: logging.Logger, method_name: str, event_dict: dict[str, Any]
) -> dict[str, Any]:
    """
    Processor converting numpy payloads so the JSON renderer accepts them.

    Args:
        logger: The logger instance
        method_name: The logging method name
        event_dict: The event dictionary

    Returns:
        Event dictionary with plain values
    """
    for key, value in event_dict.items():
        event_dict[key] = to_loggable(value)
    return event_dict


def configure_logging(level: str | None = None) -> None:
    """
    Configure structured logging for the application.

    Args:
        level: Optional level overriding the settings value (e.g. for --quiet)
    """
    settings = get_settings()
    log_level = (level or settings.log_level).upper()

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=log_level,
        force=True,
    )

    renderer = (
        structlog.dev.ConsoleRenderer(colors=settings.is_development and sys.stderr.isatty())
        if settings.log_format == "console"
        else JSONRenderer()
    )

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.contextvars.merge_contextvars,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            add_numpy_conversion,
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


def get_logger(name: str) -> Any:
    """
    Get a configured logger instance.

    Args:
        name: Logger name (typically __name__ of the module)

    Returns:
        Configured structlog logger
    """
    return structlog.get_logger(name)
