"""Exception types raised by the propagators and analysis routines."""


class StarkWannierError(Exception):
    """Base class for all package errors."""


class ConfigError(StarkWannierError, ValueError):
    """A configuration violates one of its invariants."""


class TruncationError(StarkWannierError, ValueError):
    """The truncated lattice cannot represent the requested operator."""


class AliasingError(StarkWannierError, ValueError):
    """Requested bandwidth exceeds the Nyquist limit of a sample grid."""


class LeakageExceeded(StarkWannierError, RuntimeError):
    """Mass in the outer buffer band exceeded ``leak_max``."""

    def __init__(self, leak, leak_max):
        super().__init__(f"buffer mass {leak:.3e} exceeds leak_max={leak_max:.3e}")
        self.leak = leak
        self.leak_max = leak_max


class StepUnderflow(StarkWannierError, RuntimeError):
    """The adaptive step controller could not meet the tolerance."""


class NearSingularityError(StarkWannierError, ValueError):
    """A reduced resolvent denominator is numerically zero."""


class QuadratureError(StarkWannierError, RuntimeError):
    """Adaptive quadrature did not converge."""


class DegenerateFitError(StarkWannierError, ValueError):
    """A power-law fit is not determined by the supplied data."""
