"""Package exceptions."""


class SmartpError(Exception):
    """Base class for package errors."""


class UndefinedMomentError(SmartpError, ValueError):
    """A requested moment does not exist for the given degrees of freedom."""


class NotPositiveDefiniteError(SmartpError, ValueError):
    """A matrix required to be SPD failed its Cholesky factorization."""


class InfeasibleTargetError(SmartpError, ValueError):
    """A calibration target lies outside the attainable range."""


class DegenerateMissingnessError(SmartpError, RuntimeError):
    """The missingness model implies near-total sub-unit loss."""


class ConfigError(SmartpError, ValueError):
    """Invalid run configuration."""
