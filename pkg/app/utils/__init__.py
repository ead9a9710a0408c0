"""
Utility modules for the interaction toolkit.

This package provides cross-cutting concerns:
- Settings and configuration
- Structured logging
- Custom exceptions
- Formatting and atomic output
"""

from app.utils.config_loader import ConfigLoader, apply_overrides
from app.utils.exceptions import (
    ConfigurationException,
    ContactSpecException,
    HriException,
    InfeasibleTaskException,
    ModelParseException,
    ModelValidationException,
    ObservationException,
    ScenarioAbortedException,
    SingularContactException,
    SolverException,
    TaskRankException,
    UnknownFrameException,
    ValidationException,
)
from app.utils.formatting import (
    create_table,
    format_duration,
    format_json,
    print_table,
    write_atomic,
)
from app.utils.logging import configure_logging, get_logger
from app.utils.settings import Settings, get_settings

__all__ = [
    # Settings
    "Settings",
    "get_settings",
    # Logging
    "configure_logging",
    "get_logger",
    # Exceptions
    "HriException",
    "ValidationException",
    "ModelParseException",
    "ModelValidationException",
    "UnknownFrameException",
    "ContactSpecException",
    "ObservationException",
    "ConfigurationException",
    "SolverException",
    "SingularContactException",
    "TaskRankException",
    "InfeasibleTaskException",
    "ScenarioAbortedException",
    # Config Loader
    "ConfigLoader",
    "apply_overrides",
    # Formatting
    "format_json",
    "format_duration",
    "create_table",
    "print_table",
    "write_atomic",
]
