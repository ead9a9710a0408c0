"""
Custom exceptions for the interaction toolkit.

All exceptions inherit from HriException, which carries a human-readable message
plus a details dict for structured logging. The command line maps the two families
below onto exit codes: input problems (1) and runtime or solver failures (2).
"""

from typing import Any, Optional


class HriException(Exception):
    """Base exception for all toolkit errors."""

    exit_code = 2

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        """
        Initialize base exception.

        Args:
            message: Human-readable error message
            details: Additional context for debugging
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}


# Input / validation family
class ValidationException(HriException):
    """Raised when user-supplied input is malformed or inconsistent."""

    exit_code = 1


class ModelParseException(ValidationException):
    """Raised when a model file cannot be parsed (carries line or field)."""
    pass


class ModelValidationException(ValidationException):
    """Raised when a parsed model violates a structural invariant."""
    pass


class UnknownFrameException(ValidationException):
    """Raised when a frame name does not resolve on a model."""
    pass


class ContactSpecException(ValidationException):
    """Raised when a contact specification is inconsistent (e.g. duplicate frames)."""
    pass


class ObservationException(ValidationException):
    """Raised when an observation log is unusable for identification."""
    pass


class ConfigurationException(ValidationException):
    """Raised when configuration is invalid or missing."""
    pass


# Runtime / solver family
class SolverException(HriException):
    """Raised when a numerical solve cannot produce a trustworthy result."""
    pass


class SingularContactException(SolverException):
    """Raised when the contact operator is singular or ill-conditioned."""
    pass


class TaskRankException(SolverException):
    """Raised when the task-torque map loses row rank."""
    pass


class InfeasibleTaskException(SolverException):
    """Raised when a task acceleration target cannot be realized."""
    pass


class ScenarioAbortedException(HriException):
    """Raised when a scenario stops early; carries the records produced so far."""

    def __init__(
        self,
        message: str,
        details: Optional[dict[str, Any]] = None,
        records: Optional[list[Any]] = None,
        summary: Optional[dict[str, Any]] = None,
    ):
        super().__init__(message, details)
        self.records = records or []
        self.summary = summary or {}
