"""Truncated lattice fibers.

A fiber is one fixed-``k`` copy of ``l2(Z)``; numerically it is truncated to
the symmetric site range ``[-N, N]`` and stored as a complex vector whose
entry ``i`` belongs to site ``i - N``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np


def site_range(N):
    """Integer sites ``-N..N`` as an array."""
    return np.arange(-N, N + 1)


@dataclass(frozen=True)
class FiberState:
    """Amplitudes on the truncated fiber with quasimomentum ``k`` at time ``t``.

    ``err`` and ``leak`` carry the numerical error budget and the largest
    buffer mass seen while this state was produced; both are zero for a
    freshly prepared state.
    """

    k: float
    amps: np.ndarray
    t: float = 0.0
    err: float = 0.0
    leak: float = 0.0
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1 or amps.size % 2 != 1:
            raise ValueError("amplitudes must be a 1-d array of odd length 2N+1")
        object.__setattr__(self, "amps", amps)

    @property
    def N(self):
        return (self.amps.size - 1) // 2

    @property
    def sites(self):
        return site_range(self.N)

    def index(self, n):
        if abs(n) > self.N:
            raise IndexError(f"site {n} outside [-{self.N}, {self.N}]")
        return n + self.N

    def amplitude(self, n):
        return self.amps[self.index(n)]

    def norm(self):
        return math.sqrt(math.fsum(np.abs(self.amps) ** 2))

    def window_probs(self):
        """``|P_n psi|^2`` for every site ``n``."""
        return np.abs(self.amps) ** 2

    def buffer_mass(self, B):
        if B <= 0:
            return 0.0
        p = np.abs(self.amps) ** 2
        return math.fsum(p[:B]) + math.fsum(p[-B:])

    def with_amps(self, amps, **changes):
        return replace(self, amps=amps, **changes)

    @classmethod
    def unit(cls, n, N, k=0.0, t=0.0):
        """Unit mass at site ``n``."""
        amps = np.zeros(2 * N + 1, dtype=complex)
        amps[n + N] = 1.0
        return cls(k=k, amps=amps, t=t)

    @classmethod
    def random(cls, N, rng, k=0.0, t=0.0, support=None):
        """Normalised random state, optionally supported on ``|m| <= support``."""
        amps = rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)
        if support is not None:
            amps[np.abs(site_range(N)) > support] = 0.0
        amps /= np.linalg.norm(amps)
        return cls(k=k, amps=amps, t=t)
