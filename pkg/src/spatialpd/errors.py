"""Exception hierarchy.

Everything raised for bad input derives from ``ValueError`` so callers that
only care about "bad argument" can catch that.
"""


class SpatialPDError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(SpatialPDError, ValueError):
    pass


class InvalidPatternError(SpatialPDError, ValueError):
    pass


class InvalidParameterError(SpatialPDError, ValueError):
    pass


class InvalidInputError(SpatialPDError, ValueError):
    pass


class InvalidFractionError(InvalidPatternError):
    pass


class UndefinedMetricError(SpatialPDError, ValueError):
    pass


class FitFailureError(SpatialPDError, RuntimeError):
    """Every start of a multi-start fit failed to produce a finite optimum."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class ConfigError(SpatialPDError, ValueError):
    pass


class MissingConfigFileError(ConfigError, FileNotFoundError):
    pass


class DuplicateKeyError(ConfigError):
    def __init__(self, key, line_no=None):
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate key {key!r}{where}")
        self.key = key


class ConfigTypeError(ConfigError, TypeError):
    pass


class ConfigRangeError(ConfigError):
    pass
