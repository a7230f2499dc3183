"""
Custom exceptions for the lfmkit modeling toolkit.
"""


class LfmKitError(Exception):
    """Base exception for all toolkit errors."""

    def __init__(self, message: str, error_code: str | None = None, details: dict | None = None):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict:
        """Convert exception to dictionary for logging/report output."""
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code,
            "details": self.details
        }


class DomainError(LfmKitError):
    """Value outside the mathematical domain of an operation."""
    pass


class InsufficientDataError(LfmKitError):
    """Too few observations for the requested operation."""
    pass


class RangeError(LfmKitError):
    """Requested years fall outside the available span."""
    pass


class AlignmentError(LfmKitError):
    """Series cannot be aligned on a common window."""
    pass


class ParseError(LfmKitError):
    """Malformed input text."""
    pass


class DuplicateYearError(LfmKitError):
    """The same year appears more than once in an input."""
    pass


class ContiguityError(LfmKitError):
    """Years are not contiguous."""
    pass


class DatasetNotFoundError(LfmKitError):
    """Unknown dataset key or preset name."""
    pass


class ConflictError(LfmKitError):
    """Write would overwrite an existing entry."""
    pass


class DegenerateRegressorError(LfmKitError):
    """Regressor without variance."""
    pass


class SpecificationError(LfmKitError):
    """Inconsistent model or search specification."""
    pass


class DataError(LfmKitError):
    """Data that cannot produce a usable objective."""
    pass


class ConfigurationError(LfmKitError):
    """Configuration and settings errors."""
    pass


class ValidationError(LfmKitError):
    """Data failed plausibility validation."""
    pass


def range_error(first: int, last: int, available: tuple[int, int], what: str = "series") -> RangeError:
    """Build a RangeError that lists the available span."""
    return RangeError(
        f"Requested years {first}-{last} outside {what} span {available[0]}-{available[1]}",
        error_code="OUT_OF_RANGE",
        details={"requested": [first, last], "available": list(available)}
    )


class ErrorContext:
    """Context manager for consistent error handling and logging."""

    def __init__(self, operation_name: str, logger=None):
        self.operation_name = operation_name
        self.logger = logger

    def __enter__(self):
        if self.logger:
            self.logger.debug(f"Starting operation: {self.operation_name}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            if self.logger:
                self.logger.debug(f"Operation completed successfully: {self.operation_name}")
            return False

        if self.logger:
            self.logger.error(f"Operation '{self.operation_name}' failed: {exc_val}")

        # Foreign exceptions get wrapped so callers only handle LfmKitError
        if not isinstance(exc_val, LfmKitError) and isinstance(exc_val, Exception):
            raise LfmKitError(
                f"Operation '{self.operation_name}' failed: {exc_val}",
                error_code="OPERATION_FAILED",
                details={
                    "operation": self.operation_name,
                    "original_error": str(exc_val),
                    "error_type": exc_type.__name__
                }
            ) from exc_val
        return False
