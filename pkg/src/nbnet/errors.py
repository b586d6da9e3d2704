"""Exception hierarchy shared by every module."""


class NbnError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(NbnError, ValueError):
    pass


class DegenerateTourError(NbnError, ValueError):
    pass


class ValidationError(NbnError, ValueError):
    """An assignment vector is not valid for its problem."""


class ConfigurationError(NbnError, ValueError):
    """A parameter is outside its admissible range."""


class ParseError(NbnError, ValueError):
    """Malformed text input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(NbnError, ValueError):
    """Corrupt or unsupported binary container."""


class ProblemMismatchError(NbnError, ValueError):
    """A persisted object was produced for a different problem definition."""
