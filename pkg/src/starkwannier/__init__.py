"""Stark-Wannier dynamics in the Bloch representation.

The Stark-Wannier Hamiltonian ``-d^2/dx^2 + V - x`` with a 2pi-periodic
potential is fibred over the quasimomentum ``k`` into a time dependent
lattice operator ``H(t) = (n + k + t)^2 + V*`` on ``l2(Z)``.  This package
propagates that lattice problem and measures the quantities that govern
the high-momentum regime: free phases, level crossings, stationary-phase
transition amplitudes, reduced-resolvent identities and the decay of the
deviation from free motion with the initial momentum.
"""

from .potential import (
    FourierPotential,
    apply_convolution,
    coefficients_from_samples,
    sample_real_space,
    sobolev_norm,
)
from .bloch import (
    DeviationReport,
    FiberState,
    PropagatorConfig,
    band_energy,
    free_phase,
    propagate,
    propagator_row,
    time_reverse,
)
from .crossing import (
    CrossingEvent,
    backscatter_symmetric_part,
    crossing_schedule,
    ibp_residual,
    landau_zener_amplitude,
    phase_function,
    stationary_phase_amplitude,
    twiddle_apply,
    two_level_oracle,
)
from .experiments import (
    ExperimentSpec,
    acceleration_persistence,
    bound_state_probe,
    decay_exponent_fit,
    deviation_scan,
)
from .oracle import DenseConfig, dense_propagate
from .errors import (
    AliasingError,
    ConfigError,
    DegenerateFitError,
    LeakageExceeded,
    NearSingularityError,
    QuadratureError,
    StepUnderflow,
    TruncationError,
)

__version__ = "0.1.0"
