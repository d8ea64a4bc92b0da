"""Exception types raised across the package."""


class EllipSliceError(Exception):
    """Base class for all errors raised by ellipslice."""


class ZeroLengthInterval(EllipSliceError, ValueError):
    """Uniform sampling was requested on an interval of measure zero."""


class PreconditionViolated(EllipSliceError, ValueError):
    """An operation was called outside its documented domain."""


class FactorizationFailure(EllipSliceError, ValueError):
    """A dense covariance matrix is not symmetric positive definite."""


class DimensionMismatch(EllipSliceError, ValueError):
    """Array shapes do not match the model dimension."""


class ConfigError(EllipSliceError, ValueError):
    """Invalid run or test configuration.

    ``field`` names the offending key when known; ``line`` is the line in
    the config file when the error came from parsing.
    """

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.message = message
        self.field = field
        self.line = line

    def __str__(self):
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field is not None:
            where.append(f"field {self.field!r}")
        return f"{self.message} ({', '.join(where)})" if where else self.message
