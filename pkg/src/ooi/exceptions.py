"""Exception types raised across the package."""


class OOIError(Exception):
    """Base class for all package errors."""


class NoAvailableOption(OOIError, ValueError):
    """A top-level decision was requested but no option is available."""


class DegenerateMask(OOIError, ValueError):
    """Every entry of an output mask is zero."""


class MisalignedInput(OOIError, ValueError):
    """Sequences that must have equal length do not."""


class ShapeMismatch(OOIError, ValueError):
    """Parameter and gradient shapes disagree."""


class UnknownObservation(OOIError, KeyError):
    """An observation lies outside a controller's tabulated alphabet."""


class StateExplosion(OOIError, RuntimeError):
    """Exact forward propagation would track too many hidden states."""


class StepAfterDone(OOIError, RuntimeError):
    """``step`` was called on an environment whose episode has ended."""


class UnavailableOption(OOIError, ValueError):
    """An option-level environment was asked to run an option it cannot start."""
