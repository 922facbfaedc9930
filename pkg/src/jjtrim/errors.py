"""Exception hierarchy shared across the toolkit."""


class JJTrimError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(JJTrimError, ValueError):
    """A model, config, or input value violates its contract."""


class FitError(JJTrimError, ValueError):
    """A regression cannot be performed on the given data."""


class SchemaError(JJTrimError, ValueError):
    """A file does not match its declared schema.

    ``details`` carries one human-readable message per offending
    line/field so callers can report every problem at once.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = tuple(details or ())


class ControllerError(JJTrimError, RuntimeError):
    """Closed-loop tuning aborted; carries the partial record."""

    def __init__(self, message, partial_record=None):
        super().__init__(message)
        self.partial_record = partial_record


class InfeasibleError(JJTrimError, RuntimeError):
    """A search (parking, unit-cell generation) found no solution."""
