"""Fibred time-dependent lattice Hamiltonian and its propagator.

On the fiber with quasimomentum ``k`` the Hamiltonian is

    H(t) psi(n) = (n + k + t)^2 psi(n) + (V psi)(n).

The default integrator works in the interaction picture
``c_n(t) = exp(i Phi_n(t0, t)) psi_n(t)`` where ``Phi_n`` is the free phase;
the free part is then solved exactly and only the coupling
``exp(i (Phi_n - Phi_m)) V(n-m)`` is integrated.  Phase differences are
evaluated from the factored form ``(n-m)(t-t0)(n+m+2k+t+t0)`` so no large
cubic phases are ever subtracted.
"""

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import ConfigError, LeakageExceeded, StepUnderflow
from .integrators import embedded_rk
from .lattice import FiberState, site_range
from .potential import SQRT_2PI

SCHEMES = ("interaction_picture_rk", "magnus_midpoint")

# 2 pi to 70 digits, for reducing exact rational phases
_TWO_PI = Fraction("6.283185307179586476925286766559005768394338798750211641949889184615632812572")


def band_energy(n, k, t):
    """Free energy ``(n + k + t)^2`` of site ``n``."""
    return (n + k + t) ** 2


def free_phase(n, k, s, t):
    """``int_s^t (n + k + tau)^2 dtau``, evaluated without cubic cancellation."""
    a = n + k + t
    b = n + k + s
    return (t - s) * (a * a + a * b + b * b) / 3.0


def free_phase_mod_2pi(sites, k, s, t):
    """Free phases of ``sites`` reduced to ``[0, 2 pi)`` from exact rationals.

    Floats are converted exactly to fractions, the cubic is evaluated
    exactly and reduced with a 70-digit ``2 pi``; the result is accurate to
    a few ulps regardless of how large ``n + k + t`` is.
    """
    K, S, T = Fraction(k), Fraction(s), Fraction(t)
    if S == T:
        return np.zeros(len(sites))
    dx = T - S
    sq = T * T - S * S
    cu = (T ** 3 - S ** 3) / 3
    # Phi_n = n^2 dx + n (sq + 2K dx) + (K^2 dx + K sq + cu)
    c1 = sq + 2 * K * dx
    c0 = K * K * dx + K * sq + cu
    out = np.empty(len(sites))
    for i, n in enumerate(sites):
        n = int(n)
        phi = n * n * dx + n * c1 + c0
        q = math.floor(phi / _TWO_PI)
        out[i] = float(phi - q * _TWO_PI)
    return out


def free_factors(sites, k, s, t):
    """``exp(-i Phi_n(s, t))`` for every site."""
    return np.exp(-1j * free_phase_mod_2pi(sites, k, s, t))


@dataclass(frozen=True)
class PropagatorConfig:
    """Truncation and integrator settings.

    ``N`` is the truncation half-width, ``B`` the buffer width at each edge
    whose mass is reported as leakage, ``tol`` the local error tolerance
    per unit time.  ``step_cap`` bounds the step by
    ``step_cap / max |E_n - E_m|`` over the coupling band.
    """

    N: int | None = None
    B: int | None = None
    tol: float = 1e-10
    leak_max: float = 1e-6
    scheme: str = "interaction_picture_rk"
    step_cap: float = math.pi
    rk_pair: str = "dop853"

    def validate(self, bandwidth=0):
        if self.N is None or self.B is None:
            raise ConfigError("truncation N and buffer B must be set (see PropagatorConfig.resolve)")
        if not self.N > self.B >= bandwidth:
            raise ConfigError(
                f"invariant N > buffer >= bandwidth violated (N={self.N}, buffer={self.B}, bandwidth={bandwidth})"
            )
        if not self.tol > 0:
            raise ConfigError(f"invariant tol > 0 violated (tol={self.tol})")
        if not 0 < self.leak_max < 1:
            raise ConfigError(f"invariant leak_max in (0, 1) violated (leak_max={self.leak_max})")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        return self

    @classmethod
    def auto(cls, n, t_max, bandwidth, **kw):
        """Default truncation ``N = 4(|n| + |t_max|) + 16 bw``, ``B = 4 bw``."""
        bw = max(bandwidth, 1)
        N = int(math.ceil(4 * (abs(n) + abs(t_max)))) + 16 * bw
        return cls(N=N, B=4 * bw, **kw)

    def resolve(self, n, t_max, bandwidth):
        """Fill a missing ``N`` or ``B`` with the defaults of ``auto``."""
        if self.N is not None and self.B is not None:
            return self
        auto = PropagatorConfig.auto(n, t_max, bandwidth)
        return replace(self, N=self.N if self.N is not None else auto.N, B=self.B if self.B is not None else auto.B)


@dataclass(frozen=True)
class DeviationReport:
    """Measured ``||P_n (U(t) - U_0(t))||`` with its error budget.

    ``t`` and ``k`` locate the sampled supremum; ``valid`` is false when the
    leakage threshold was exceeded; ``converged`` records whether refining
    the k-grid changed the supremum by less than 5%.
    """

    n: int
    t: float
    dev_norm: float
    err: float
    k_samples: int
    k: float = 0.0
    leak: float = 0.0
    valid: bool = True
    converged: bool = True


class _InteractionRHS:
    """Right-hand side ``c' = -i W(t) c`` of the interaction picture."""

    def __init__(self, pot, N, k, t0):
        self.t0 = t0
        m = site_range(N).astype(float)
        self.terms = []
        for d in range(1, pot.bandwidth + 1):
            v = pot.coefficient(d) / SQRT_2PI
            if v == 0 and pot.coefficient(-d) == 0:
                continue
            vm = pot.coefficient(-d) / SQRT_2PI
            # coupling source m -> target m + d; base of the phase factor
            base = 2.0 * m[: m.size - d] + d + 2.0 * k
            self.terms.append((d, v, vm, base))

    def __call__(self, t, c):
        dt = t - self.t0
        s = t + self.t0
        out = np.zeros_like(c)
        matrix = c.ndim == 2
        for d, v, vm, base in self.terms:
            ph = np.exp(1j * (d * dt) * (base + s))
            if matrix:
                ph = ph[:, None]
            out[d:] += v * ph * c[:-d]
            out[:-d] += vm * ph.conj() * c[d:]
        return -1j * out


def coupling_frequency(N, k, t_extreme, bandwidth):
    """Largest ``|E_n - E_m|`` with ``|n - m| <= bandwidth`` on ``[-N, N]``."""
    return bandwidth * (2 * N + bandwidth + 2 * (abs(k) + t_extreme))


def _check_size(state, pot, cfg):
    cfg.validate(pot.bandwidth)
    if state.N != cfg.N:
        raise ConfigError(f"state half-width {state.N} does not match config N={cfg.N}")


def _step_cap(cfg, pot, k, ta, tb):
    omega = coupling_frequency(cfg.N, k, max(abs(ta), abs(tb)), pot.bandwidth)
    return cfg.step_cap / omega if omega > 0 else math.inf


def evolve_interaction(c0, k, t0, stops, pot, cfg, on_stop=None):
    """Interaction-picture coefficients from ``t0`` through ``stops``.

    ``c0`` may be a vector or a matrix of column states.  Returns the final
    coefficients and the step statistics.
    """
    rhs = _InteractionRHS(pot, cfg.N, k, t0)
    t_end = stops[-1] if len(stops) else t0
    return embedded_rk(
        rhs, t0, c0, stops, cfg.tol, h_max=_step_cap(cfg, pot, k, t0, t_end), method=cfg.rk_pair, on_stop=on_stop
    )


def _buffer_mass(c, B):
    p = np.abs(c) ** 2
    if p.ndim == 1:
        return math.fsum(p[:B]) + math.fsum(p[-B:])
    return float(np.max(p[:B].sum(axis=0) + p[-B:].sum(axis=0)))


def _magnus_midpoint(state, t1, pot, cfg):
    """Adaptive midpoint exponential in the original picture (step doubling)."""
    N = cfg.N
    sites = site_range(N)
    bw = max(pot.bandwidth, 1)
    # upper band storage for eig_banded: ab[bw + i - j, j] = H[i, j], i <= j
    band = np.zeros((bw + 1, 2 * N + 1), dtype=complex)
    for d in range(1, pot.bandwidth + 1):
        # H[i, i + d] = Vhat(-d)/sqrt(2 pi)
        band[bw - d, d:] = pot.coefficient(-d) / SQRT_2PI

    def expstep(psi, t, h):
        band[bw] = (sites + state.k + t + 0.5 * h) ** 2
        w, q = scipy.linalg.eig_banded(band, lower=False)
        return q @ (np.exp(-1j * h * w) * (q.conj().T @ psi))

    t = state.t
    psi = state.amps.copy()
    span = t1 - t
    direction = math.copysign(1.0, span) if span else 1.0
    h = min(abs(span), 1e-3)
    budget = 0.0
    leak = 0.0
    while direction * (t1 - t) > 0:
        if h < 1e-13 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size {h:.3e} underflow at t={t:.6g}")
        remaining = abs(t1 - t)
        last = h >= remaining
        step = direction * (remaining if last else h)
        full = expstep(psi, t, step)
        half = expstep(expstep(psi, t, 0.5 * step), t + 0.5 * step, 0.5 * step)
        err = float(np.linalg.norm(full - half)) / 3.0
        allowed = cfg.tol * abs(step)
        if err <= allowed:
            t = t1 if last else t + step
            psi = half
            budget += err
            leak = max(leak, _buffer_mass(psi, cfg.B))
            if not last:
                h = abs(step) * (5.0 if err == 0 else min(5.0, max(1.0, 0.9 * math.sqrt(allowed / err))))
        else:
            h = abs(step) * max(0.2, 0.9 * math.sqrt(allowed / err))
    return psi, budget, leak


def propagate(state, t1, pot, cfg):
    """Evolve ``state`` from ``state.t`` to ``t1`` with ``U(t1, state.t)``.

    The returned state carries the accumulated error budget in ``err``
    (sum of accepted local error estimates plus the largest buffer mass)
    and the largest buffer mass seen at the end point in ``leak``.
    Raises ``LeakageExceeded`` if the buffer mass exceeds ``cfg.leak_max``.
    """
    _check_size(state, pot, cfg)
    t0 = state.t
    sites = state.sites
    if pot.is_zero or t1 == t0:
        amps = state.amps * free_factors(sites, state.k, t0, t1)
        return state.with_amps(amps, t=t1, leak=state.leak)

    if cfg.scheme == "magnus_midpoint":
        amps, budget, leak = _magnus_midpoint(state, t1, pot, cfg)
    else:
        c, stats = evolve_interaction(state.amps, state.k, t0, [t1], pot, cfg)
        leak = _buffer_mass(c, cfg.B)
        budget = stats.budget
        amps = c * free_factors(sites, state.k, t0, t1)
    if leak > cfg.leak_max:
        raise LeakageExceeded(leak, cfg.leak_max)
    leak = max(leak, state.leak)
    return state.with_amps(amps, t=t1, err=state.err + budget + leak, leak=leak)


def propagator_row(n, t, pot, cfg, k=0.0):
    """Row ``n`` of ``U(t, 0)`` on the truncated fiber, indexed by source site.

    Obtained by propagating the unit vector at ``n`` backward from ``t`` to
    ``0`` (that gives column ``n`` of ``U(0, t) = U(t, 0)^*``) and
    conjugating.  Returns ``(row, err)``.
    """
    cfg.validate(pot.bandwidth)
    if abs(n) > cfg.N - cfg.B:
        raise ConfigError(f"row {n} lies in the buffer (N={cfg.N}, B={cfg.B})")
    start = FiberState.unit(n, cfg.N, k=k, t=t)
    back = propagate(start, 0.0, pot, cfg)
    return back.amps.conj(), back.err


def free_row(n, t, N, k=0.0):
    """Row ``n`` of the free propagator ``U_0(t, 0)``."""
    row = np.zeros(2 * N + 1, dtype=complex)
    row[n + N] = free_factors([n], k, 0.0, t)[0]
    return row


def time_reverse(state):
    """``(T psi)(n) = conj(psi(-n))``; maps the fiber ``k`` to ``-k``."""
    return state.with_amps(state.amps[::-1].conj(), k=-state.k, t=-state.t)


def row_deviation(n, t, pot, cfg, k=0.0):
    """``||P_n (U(t) - U_0(t))||`` on one fiber from the propagator row."""
    row, err = propagator_row(n, t, pot, cfg, k=k)
    dev = float(np.linalg.norm(row - free_row(n, t, cfg.N, k=k)))
    return dev, err
