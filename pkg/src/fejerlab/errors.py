"""Exception types shared across the package."""


class FejerlabError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedSetError(FejerlabError):
    """No closed form exists for the requested set variant or combination."""


class DimensionMismatchError(FejerlabError, ValueError):
    """Operands live in different ambient dimensions."""


class NonFiniteValueError(FejerlabError, ValueError):
    """A value left the representable range (NaN/Inf or beyond the norm cap)."""


class MonotonicityViolationError(FejerlabError):
    """A quantity that must be nonincreasing grew; signals a broken operator."""


class CertificateRequiredError(FejerlabError):
    """The operation needs an averagedness certificate the operator lacks."""


class ConfigError(FejerlabError, ValueError):
    """A scenario configuration failed validation; message carries the field path."""
