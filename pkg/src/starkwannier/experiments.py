"""Desk-scale dynamical experiments on the fibred Stark-Wannier problem.

All experiments start from the unit vector at site ``n`` on a grid of
fibers ``k`` and propagate forward (``t_max > 0``) or backward
(``t_max < 0``).  In the interaction picture the diagonal amplitude
``c_n(t) = Omega_nn(t)`` carries everything needed:

* window norm ``||P_n U(t) e_n|| = |c_n(t)|``;
* deviation ``||P_n (U(t) - U_0(t))||``, the norm of row ``n`` of
  ``Omega(t) - 1``, which for a unitary ``Omega`` equals
  ``sqrt(2 - 2 Re c_n(t))``.

Fibers are handled by the time shift ``U^k(t, s) = U^0(t + k, s + k)``.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .bloch import DeviationReport, PropagatorConfig, _buffer_mass, evolve_interaction
from .errors import ConfigError, DegenerateFitError
from .lattice import FiberState
from .potential import FourierPotential

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: potential, coupling scale, sites, horizon, numerics.

    ``cfg`` may leave ``N``/``B`` unset, in which case the default
    truncation for each site is used.  A negative ``t_max`` scans
    ``[t_max, 0]``.
    """

    name: str
    potential: FourierPotential
    lam: float = 1.0
    n_list: tuple = (4, 6, 8, 12, 16, 24, 32)
    t_max: float = 8.0
    cfg: PropagatorConfig = field(default_factory=PropagatorConfig)
    k_grid: int = 17
    refine: int = 8
    workers: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.k_grid < 1:
            raise ValueError("k_grid must be positive")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))

    @property
    def scaled_potential(self):
        return self.potential.scaled(self.lam)

    def config_for(self, n):
        bw = self.scaled_potential.bandwidth
        cfg = self.cfg.resolve(n, self.t_max, bw).validate(bw)
        if abs(n) > cfg.N - cfg.B:
            raise ConfigError(f"invariant |n| <= N - buffer violated for n={n} (N={cfg.N}, buffer={cfg.B})")
        return cfg

    def k_values(self):
        return [j / self.k_grid for j in range(self.k_grid)]

    def times(self):
        return time_grid(self.t_max, self.refine)


@dataclass(frozen=True)
class Cell:
    """One sampled ``(n, k, t)`` point of an experiment."""

    n: int
    k: float
    t: float
    window_prob: float
    dev_norm: float
    err: float
    leak: float
    valid: bool


def time_grid(t_max, refine=8):
    """Crossing midpoints and edges ``j/4`` refined uniformly by ``refine``."""
    steps = int(math.ceil(abs(t_max) * 4 * refine - 1e-9))
    grid = [math.copysign(j / (4.0 * refine), t_max) for j in range(steps + 1)]
    if abs(grid[-1]) < abs(t_max):
        grid.append(float(t_max))
    return np.array([min(abs(g), abs(t_max)) * (1 if t_max >= 0 else -1) for g in grid])


def geometric_grid(t_max, t_min=0.125):
    """``0`` followed by ``t_max / 2^j`` down to about ``t_min``."""
    J = max(1, int(math.ceil(math.log2(abs(t_max) / t_min))))
    return np.array([0.0] + [t_max / 2.0 ** j for j in range(J, -1, -1)])


def _dev_and_err(c, budget, norm2, leak):
    dev2 = max(0.0, 2.0 - 2.0 * c.real)
    dev = math.sqrt(dev2)
    err2 = 2.0 * budget + abs(norm2 - 1.0) + 2.0 * leak
    if err2 == 0.0:
        return dev, 0.0
    err = math.sqrt(err2) if dev == 0.0 else min(math.sqrt(err2), err2 / dev)
    return dev, err


def window_trace(n, k, times, pot, cfg):
    """Cells for the unit state at ``n`` on fiber ``k`` at the given times.

    ``times`` must be monotone away from 0.  Uses the time-shifted ``k = 0``
    propagation started at ``t = k``.
    """
    N = cfg.N
    c0 = np.zeros(2 * N + 1, dtype=complex)
    c0[n + N] = 1.0
    cells = []
    leak_seen = [0.0]

    def record(tau, c, stats):
        leak = _buffer_mass(c, cfg.B)
        leak_seen[0] = max(leak_seen[0], leak)
        cn = complex(c[n + N])
        norm2 = math.fsum(np.abs(c) ** 2)
        dev, err = _dev_and_err(cn, stats.budget, norm2, leak_seen[0])
        cells.append(
            Cell(
                n=n,
                k=k,
                t=float(tau - k),
                window_prob=abs(cn) ** 2,
                dev_norm=dev,
                err=err,
                leak=leak_seen[0],
                valid=leak_seen[0] <= cfg.leak_max,
            )
        )

    if pot.is_zero:
        # exact free motion: c_n stays 1
        return [Cell(n, k, float(t), 1.0, 0.0, 0.0, 0.0, True) for t in times]
    stops = [float(t) + k for t in times]
    evolve_interaction(c0, 0.0, k, stops, pot, cfg, on_stop=record)
    return cells


def _trace_job(args):
    n, k, times, pot, cfg = args
    return window_trace(n, k, times, pot, cfg)


def scan_cells(spec):
    """All ``(n, k, t)`` cells of ``spec``, ordered by ``n``, then ``k``, then ``|t|``."""
    pot = spec.scaled_potential
    times = spec.times()
    jobs = [(n, k, times, pot, spec.config_for(n)) for n in spec.n_list for k in spec.k_values()]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            results = list(ex.map(_trace_job, jobs))
    else:
        results = [_trace_job(j) for j in jobs]
    return [cell for cells in results for cell in cells]


def reduce_cells(cells, k_grid):
    """Supremum over ``(k, t)`` per site, with the k-grid refinement check."""
    by_n = {}
    for c in cells:
        by_n.setdefault(c.n, []).append(c)
    reports = []
    for n in sorted(by_n):
        group = by_n[n]
        best = max(group, key=lambda c: c.dev_norm)
        k_coarse = {j / k_grid for j in range(0, k_grid, 2)}
        coarse = max((c.dev_norm for c in group if c.k in k_coarse), default=best.dev_norm)
        converged = best.dev_norm == 0.0 or abs(best.dev_norm - coarse) <= 0.05 * best.dev_norm
        reports.append(
            DeviationReport(
                n=n,
                t=best.t,
                dev_norm=best.dev_norm,
                err=best.err,
                k_samples=len({c.k for c in group}),
                k=best.k,
                leak=max(c.leak for c in group),
                valid=all(c.valid for c in group),
                converged=converged,
            )
        )
    return reports


def deviation_scan(spec):
    """Sampled ``sup_{t, k} ||P_n (U(t) - U_0(t))||`` for every ``n`` in the spec."""
    return reduce_cells(scan_cells(spec), spec.k_grid)


def decay_exponent_fit(reports, n_boot=2000, seed=0):
    """Fit ``dev_norm ~ C n^(-exponent)`` by least squares in log-log.

    Returns ``(exponent, ci)`` where ``ci`` is the half-width of the 95%
    bootstrap interval over resampled ``(n, dev_norm)`` pairs.
    """
    ns = np.array([r.n for r in reports], dtype=float)
    devs = np.array([r.dev_norm for r in reports], dtype=float)
    if len(set(ns.tolist())) < 5:
        raise DegenerateFitError("need at least 5 distinct n values")
    if not all(r.valid for r in reports):
        raise DegenerateFitError("fit over invalid (leaking) reports")
    if np.any(ns <= 0):
        raise DegenerateFitError("power-law fit needs n > 0")
    floor = [r.n for r in reports if r.dev_norm <= r.err]
    if floor:
        raise DegenerateFitError(f"deviation at the error floor for n={floor}")
    x, y = np.log(ns), np.log(devs)
    exponent = -np.polyfit(x, y, 1)[0]
    rng = np.random.default_rng(seed)
    boot = []
    while len(boot) < n_boot:
        idx = rng.integers(0, x.size, x.size)
        if np.unique(x[idx]).size < 2:
            continue
        boot.append(-np.polyfit(x[idx], y[idx], 1)[0])
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return float(exponent), float(0.5 * (hi - lo))


def window_minima(spec):
    """``min_{t, k} (|c_n(t)| - err)`` per site: a lower bound on the window norm."""
    out = {}
    for c in scan_cells(spec):
        mass = math.sqrt(c.window_prob) - c.err
        out[c.n] = min(out.get(c.n, math.inf), mass)
    return out


def acceleration_persistence(spec, epsilon):
    """Smallest ``n`` whose window norm stays ``>= 1 - epsilon`` at every sample, else ``None``."""
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    minima = window_minima(spec)
    for n in sorted(minima):
        if minima[n] >= 1.0 - epsilon:
            return n
    return None


@dataclass(frozen=True)
class ProbeResult:
    """Window-norm history of one site and the (heuristic) decay verdict."""

    n: int
    times: np.ndarray
    values: np.ndarray
    decaying: bool
    inconclusive: bool
    heuristic: str = "last < max/2 and decreasing over the final three samples"


def bound_state_probe(psi0, spec, floor=None):
    """Track ``||P_n U(t) psi||`` on a geometric time grid for each ``n`` in the spec.

    ``psi0`` is a list of fiber states, one per sampled ``k``; the window
    norm is the root mean square over the ensemble.  ``decaying`` uses a
    finite-horizon heuristic (see ``ProbeResult.heuristic``); values at or
    below the error floor are flagged ``inconclusive``.
    """
    pot = spec.scaled_potential
    times = geometric_grid(spec.t_max)
    masses = {n: np.zeros(times.size) for n in spec.n_list}
    floors = np.zeros(times.size)
    n_ref = max(spec.n_list, key=abs)
    cfg = spec.config_for(n_ref)
    for state in psi0:
        if state.N != cfg.N:
            raise ValueError(f"ensemble state half-width {state.N} does not match N={cfg.N}")
        if pot.is_zero:
            for n in spec.n_list:
                masses[n] += abs(state.amplitude(n)) ** 2
            continue
        row = [0]

        def record(t, c, stats):
            j = row[0]
            for n in spec.n_list:
                masses[n][j] += abs(c[n + cfg.N]) ** 2
            floors[j] = max(floors[j], stats.budget + _buffer_mass(c, cfg.B))
            row[0] += 1

        evolve_interaction(state.amps, state.k, state.t, [state.t + t for t in times], pot, cfg, on_stop=record)
    results = {}
    count = len(psi0)
    for n in spec.n_list:
        values = np.sqrt(masses[n] / count)
        err = floors if floor is None else np.full(times.size, floor)
        inconclusive = bool(np.max(values) <= np.max(err))
        tail = values[-3:]
        decaying = bool(values[-1] < 0.5 * np.max(values) and tail[0] > tail[1] > tail[2])
        results[n] = ProbeResult(n, times, values, decaying and not inconclusive, inconclusive)
    return results


def window_parseval(state):
    """``(sum_n ||P_n psi||^2, ||psi||^2)``, both by compensated summation."""
    probs = np.abs(state.amps) ** 2
    return math.fsum(probs), state.norm() ** 2


def weight(m):
    """``<m> = m`` for ``m > 0`` and ``1`` otherwise."""
    return m if m > 0 else 1


def tail_sum(n, beta):
    """``sum_{l >= 0} <2n + l>^(-beta)`` for ``n >= 1`` and ``beta > 1``."""
    if n < 1 or beta <= 1:
        raise ValueError("tail_sum needs n >= 1 and beta > 1")
    return float(scipy.special.zeta(beta, 2 * n))


def window_ensemble(n, N, k_grid):
    """Unit states at site ``n`` on the fibers ``j / k_grid``."""
    return [FiberState.unit(n, N, k=j / k_grid) for j in range(k_grid)]
