"""
Exception hierarchy for drbandit.
"""


class DrBanditError(Exception):
    """Base class for all drbandit errors."""


class ConfigurationError(DrBanditError, ValueError):
    """Raised when a riskmetric, arm list or experiment setting is invalid."""


class UnsupportedSupportError(DrBanditError, ValueError):
    """Raised when a distribution has atoms outside the nonnegative reals."""


class EmptySampleError(DrBanditError, ValueError):
    """Raised when an empirical CDF is requested from zero samples."""


class DimensionMismatchError(DrBanditError, ValueError):
    """Raised when weights and arms do not have the same length."""


class UndefinedRadiusError(DrBanditError, ValueError):
    """Raised when a confidence radius is requested for an unpulled arm."""


class GapUndefinedError(DrBanditError):
    """Raised when every grid point is co-optimal."""


class EmptyGridError(DrBanditError):
    """Raised when a grid enumeration yields no points."""


class HorizonTooSmallError(DrBanditError):
    """Raised when the exploration budget exceeds the horizon."""


class InstanceMismatchError(DrBanditError):
    """Raised when an oracle value belongs to a different instance."""


class ExperimentError(DrBanditError):
    """Raised when an experiment cannot be run for a (policy, horizon) pair."""


class FitError(DrBanditError):
    """Raised when a scaling fit has too few usable checkpoints."""


class ExportError(DrBanditError):
    """Raised when a result cannot be exported."""
