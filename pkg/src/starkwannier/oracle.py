"""Brute-force reference propagator for small truncations.

Each step applies the exact exponential of the midpoint Hamiltonian,
``psi <- exp(-i h H(t + h/2)) psi``, computed from a dense Hermitian
eigendecomposition.  Second order, unitary per step, deliberately simple.
"""

import math
from dataclasses import dataclass

import numpy as np

from .lattice import site_range

MAX_N = 128


@dataclass(frozen=True)
class DenseConfig:
    N: int
    h: float
    method: str = "midpoint-exponential"

    def __post_init__(self):
        if not 0 < self.N <= MAX_N:
            raise ValueError(f"dense oracle needs 0 < N <= {MAX_N}, got {self.N}")
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if self.method != "midpoint-exponential":
            raise ValueError(f"unknown method {self.method!r}")


def dense_hamiltonian(pot, N, k, t):
    m = site_range(N)
    return np.diag((m + k + t) ** 2).astype(complex) + pot.matrix(N)


def dense_step(pot, N, k, t, h, psi):
    w, q = np.linalg.eigh(dense_hamiltonian(pot, N, k, t + 0.5 * h))
    return q @ (np.exp(-1j * h * w) * (q.conj().T @ psi))


def dense_propagate(state, t1, pot, dc):
    """Evolve ``state`` to ``t1`` with ``ceil(|t1 - t|/h)`` midpoint steps, the last one shortened."""
    if state.N != dc.N:
        raise ValueError(f"state half-width {state.N} does not match DenseConfig N={dc.N}")
    t = state.t
    span = t1 - t
    steps = math.ceil(abs(span) / dc.h - 1e-12) if span else 0
    h = math.copysign(dc.h, span) if span else 0.0
    psi = state.amps.copy()
    for j in range(steps):
        step = h if j < steps - 1 else (t1 - t)
        psi = dense_step(pot, dc.N, state.k, t, step, psi)
        t = t + step if j < steps - 1 else t1
    return state.with_amps(psi, t=t1)


def richardson_estimate(state, t1, pot, dc):
    """Propagate with ``h`` and ``h/2``; return the finer result and ``|diff|/3``."""
    coarse = dense_propagate(state, t1, pot, dc)
    fine = dense_propagate(state, t1, pot, DenseConfig(dc.N, dc.h / 2))
    return fine, float(np.linalg.norm(fine.amps - coarse.amps)) / 3.0
