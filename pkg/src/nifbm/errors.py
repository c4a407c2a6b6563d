"""Exception types shared across the package."""


class NifbmError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefiniteError(NifbmError):
    """A covariance matrix that should be positive definite is not.

    This signals a bug in the covariance evaluation (the increment
    covariance is positive definite in exact arithmetic) or a loss of
    positive definiteness through rounding.
    """


class LengthError(NifbmError):
    """An increment series is too short for the requested operation."""


class GridMismatchError(NifbmError):
    """Drift samples and increment series live on different grids."""


class ZeroDenominatorError(NifbmError):
    """A denominator that must be nonzero vanished."""


class HTooLargeError(NifbmError):
    """The requested asymptotics need H < 3/4 and got H >= 3/4."""


class ConfigError(NifbmError):
    """An experiment configuration failed validation."""
