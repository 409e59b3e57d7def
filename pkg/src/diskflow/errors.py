"""Exception types shared across the solver modules."""


class DiskflowError(Exception):
    """Base class for all diskflow errors."""


class InvalidArgument(DiskflowError, ValueError):
    """An argument is outside the supported range."""


class NotDivergenceFree(DiskflowError):
    """A field handed to the mode decomposition has too large a divergence residual."""


class InsufficientAngularResolution(DiskflowError):
    """The angular sample count cannot hold the requested mode truncation."""


class UnsupportedVariant(DiskflowError):
    """Operation called with a boundary-condition variant it does not support."""


class SolverFailure(DiskflowError):
    """A linear solve produced a non-finite or singular result."""


class NonpositiveTime(DiskflowError, ValueError):
    """A profile was requested at t <= 0."""


class OutOfRange(DiskflowError, ValueError):
    """(p, q) outside the validity range of the requested rate formula."""


class GridMismatch(DiskflowError):
    """Two objects that must share a radial grid do not."""


class InsufficientSamples(DiskflowError, ValueError):
    """Too few samples inside the fitting window."""


class NonpositiveValues(DiskflowError, ValueError):
    """A log-log fit was asked for on data with non-positive values."""


class NoContraction(DiskflowError):
    """Successive-approximation ratios stayed above one; data too large."""


class BlowUp(DiskflowError):
    """A nonlinear step grew a norm past the configured guard factor."""


class ConfigError(DiskflowError):
    """An experiment configuration file could not be parsed or validated."""


class UnknownPreset(DiskflowError, KeyError):
    """A preset name is not in the registry."""
