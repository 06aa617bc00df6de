"""Analysis local to one crossing interval ``I_l = l/2 + [-1/4, 1/4)``.

For a fixed site ``n >= 0`` the free levels ``E_n(t) = (n + t)^2`` and
``E_{-n-l}(t)`` are degenerate exactly once in ``I_l``, at ``t = l/2``.  This
module builds the crossing schedule, the relative phase of the pair, the
first-order (stationary-phase) transition magnitude and a two-level oracle
for it, the reduced resolvent and the twiddle operation built on it, the
double integration-by-parts identity, and the backscattering sum.

Everything here lives on the ``k = 0`` fiber; other fibers follow by the
time shift ``U^k(t, s) = U^0(t + k, s + k)``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bloch import _buffer_mass, evolve_interaction, free_phase
from .errors import LeakageExceeded, NearSingularityError, QuadratureError
from .integrators import magnus4_su2
from .lattice import FiberState, site_range
from .potential import SQRT_2PI


@dataclass(frozen=True)
class CrossingEvent:
    """Degeneracy of sites ``n`` and ``-n-l`` at ``t_star = l/2``."""

    n: int
    l: int
    t_star: float
    pair: tuple
    coupling: complex
    curvature: float

    @classmethod
    def build(cls, n, l, pot):
        a = 2 * n + l
        if a == 0:
            raise ValueError(f"self-crossing n={n}, l={l} (2n + l = 0) has no partner site")
        return cls(
            n=n,
            l=l,
            t_star=l / 2,
            pair=(n, -n - l),
            coupling=pot.coefficient(a) / SQRT_2PI,
            curvature=2.0 * a,
        )

    @property
    def order(self):
        """``2n + l``, the frequency that couples the pair."""
        return 2 * self.n + self.l

    @property
    def interval(self):
        return (self.l / 2 - 0.25, self.l / 2 + 0.25)

    def is_degenerate(self):
        """Exact rational check of ``E_n(l/2) == E_{-n-l}(l/2)``."""
        t = Fraction(self.l, 2)
        return (self.pair[0] + t) ** 2 == (self.pair[1] + t) ** 2


def crossing_schedule(n, t_max, pot):
    """Crossing events of site ``n >= 0`` for ``l = 0 .. floor(2 t_max)``.

    Self-crossings (``2n + l == 0``) are skipped.
    """
    if n < 0:
        raise ValueError("crossing_schedule expects n >= 0; use time reversal for n < 0")
    return [CrossingEvent.build(n, l, pot) for l in range(int(math.floor(2 * t_max)) + 1) if 2 * n + l > 0]


def phase_function(n, l, t):
    """Relative phase ``phi(t) = int_0^t (E_n - E_{-n-l})`` and its derivatives."""
    a = 2 * n + l
    return a * (t * t - l * t), a * (2 * t - l), 2.0 * a


def stationary_phase_amplitude(event):
    """First-order transition magnitude ``|coupling| sqrt(2 pi / |curvature|)``.

    Equals ``|Vhat(2n+l)| / sqrt(2 (2n+l))``.
    """
    if event.order <= 0:
        raise ValueError("stationary_phase_amplitude requires 2n + l > 0")
    return abs(event.coupling) * math.sqrt(2.0 * math.pi / abs(event.curvature))


def _two_level(event, ta, tb, tol):
    v = event.coupling
    n, l = event.n, event.l
    if v == 0:
        return 0j, 0.0
    phi_a = phase_function(n, l, ta)[0]

    def coupling(t):
        return v * np.exp(1j * (phase_function(n, l, t)[0] - phi_a))

    omega = abs(event.order) * max(abs(2 * ta - l), abs(2 * tb - l)) + abs(v)
    c, stats = magnus4_su2(coupling, ta, tb, np.array([1.0, 0.0], dtype=complex), tol, h_max=1.0 / omega)
    x2 = c[1] * np.exp(-1j * free_phase(event.pair[1], 0.0, ta, tb))
    return complex(x2), abs(np.linalg.norm(c) - 1.0)


def two_level_oracle(event, window=None, tol=1e-10):
    """Off-level amplitude of the isolated pair across ``window``.

    Integrates ``i x' = [[E_n, v], [conj v, E_{-n-l}]] x`` from ``x(t_a) = (1, 0)``
    and returns ``x_2(t_b)``.  ``window`` defaults to the whole interval
    ``I_l`` and must lie inside it.
    """
    lo, hi = event.interval
    ta, tb = (lo, hi) if window is None else window
    if not lo <= ta < tb <= hi:
        raise ValueError(f"window ({ta}, {tb}) is not inside I_{event.l} = [{lo}, {hi}]")
    return _two_level(event, ta, tb, tol)[0]


def landau_zener_amplitude(event, half_width=8.0, tol=1e-10):
    """Off-level amplitude over the complete crossing ``t_star +- half_width``.

    This is the isolated two-level problem run far past ``I_l`` so that the
    end-point contributions, of relative size ``1/(half_width sqrt(pi (2n+l)))``,
    no longer mask the stationary-phase transition.
    """
    return _two_level(event, event.t_star - half_width, event.t_star + half_width, tol)[0]


def landau_zener_exact(event):
    """Asymptotic ``|x_2| = sqrt(1 - exp(-pi |v|^2 / (2n+l)))`` of the linear sweep."""
    return math.sqrt(-math.expm1(-math.pi * abs(event.coupling) ** 2 / abs(event.order)))


def _check_interval(l, t):
    if not l / 2 - 0.25 - 1e-12 <= t <= l / 2 + 0.25 + 1e-12:
        raise ValueError(f"t={t} is outside I_{l} = [{l / 2 - 0.25}, {l / 2 + 0.25}]")


def reduced_resolvent(n, l, t, N):
    """Diagonal of ``(H_0(t) - E_n(t))^{-1}`` off the pair ``{n, -n-l}``, and its time derivative."""
    m = site_range(N)
    den = (m - n) * (m + n + 2.0 * t)
    pair = (m == n) | (m == -n - l)
    admissible = ~pair
    if np.any(np.abs(den[admissible]) < 1e-9):
        bad = m[admissible][np.abs(den[admissible]) < 1e-9]
        raise NearSingularityError(f"resolvent denominator vanishes at sites {bad.tolist()} (n={n}, l={l}, t={t})")
    r = np.zeros(m.size)
    rd = np.zeros(m.size)
    r[admissible] = 1.0 / den[admissible]
    rd[admissible] = -2.0 / ((m[admissible] - n) * (m[admissible] + n + 2.0 * t) ** 2)
    return r, rd


def twiddle_apply(A, n, l, t):
    """``P_n A R_l(t)`` for a square operator ``A`` on the sites ``[-N, N]``.

    The result has a single nonzero row, row ``n``.
    """
    A = np.asarray(A)
    N = (A.shape[0] - 1) // 2
    _check_interval(l, t)
    r, _ = reduced_resolvent(n, l, t, N)
    out = np.zeros_like(A, dtype=np.result_type(A, float))
    out[n + N] = A[n + N] * r
    return out


def free_hamiltonian_shifted(n, t, N):
    """Diagonal of ``H_0(t) - E_n(t)`` on the ``k = 0`` fiber."""
    m = site_range(N)
    return (m - n) * (m + n + 2.0 * t)


def resolvent_coupling_norm(n, l, t, pot, N):
    """Spectral norm of ``R_l(t) V`` on the truncated fiber."""
    r, _ = reduced_resolvent(n, l, t, N)
    return float(np.linalg.norm(r[:, None] * pot.matrix(N), 2))


def _gauss_nodes(a, b, order, panels):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


class _IBPRows:
    """Row ``n`` of every operator appearing in the integration-by-parts identity."""

    def __init__(self, n, l, pot, N):
        self.n, self.l, self.N = n, l, N
        self.sites = site_range(N)
        self.V = pot.matrix(N)
        self.vrow = self.V[n + N]
        self.pair = ((self.sites == n) | (self.sites == -n - l)).astype(float)

    def __call__(self, t):
        r, rd = reduced_resolvent(self.n, self.l, t, self.N)
        V = self.V
        vt = self.vrow * r  # ~V
        vtd = self.vrow * rd  # d/dt ~V
        w = vt @ V  # ~V V
        vtt = w * r  # (~V V)~
        vttd = (vtd @ V) * r + w * rd
        lhs = self.vrow * (1.0 - self.pair)
        rhs = vtt @ V + 1j * vttd - w * self.pair - 1j * vtd
        boundary = 1j * (vt - vtt)
        return lhs, rhs, boundary

    def phases(self, t):
        # exp(i (Phi_n - Phi_m)) relative to time 0 on the k = 0 fiber
        m = self.sites
        return np.exp(1j * (self.n - m) * t * (self.n + m + t))


def _ibp_pass(rows, c0, pot, cfg, a, b, order, panels):
    nodes, weights = _gauss_nodes(a, b, order, panels)
    stops = [a] + nodes.tolist() + [b]
    values = []

    def record(t, c, stats):
        values.append(c.copy())

    c_end, stats = evolve_interaction(c0, 0.0, 0.0, [s for s in stops], pot, cfg, on_stop=record)
    leak = _buffer_mass(c_end, cfg.B)
    if leak > cfg.leak_max:
        raise LeakageExceeded(leak, cfg.leak_max)
    f_lhs = np.empty(nodes.size, dtype=complex)
    f_rhs = np.empty(nodes.size, dtype=complex)
    for i, t in enumerate(nodes):
        lhs, rhs, _ = rows(t)
        pc = rows.phases(t) * values[i + 1]
        f_lhs[i] = lhs @ pc
        f_rhs[i] = rhs @ pc
    bnd = []
    for t, c in ((a, values[0]), (b, values[-1])):
        _, _, boundary = rows(t)
        bnd.append(boundary @ (rows.phases(t) * c))
    return weights @ f_lhs, weights @ f_rhs, bnd[1] - bnd[0], stats.budget


def ibp_sides(n, l, pot, cfg, quad_tol=1e-10, order=10, panels=None, seed=0, state=None, max_panels=256):
    """Both sides of the double integration-by-parts identity on ``[l/2 - 1/4, l/2 + 1/4]``.

    Returns a dict with the left integral, the right integral, the boundary
    term, the residual ``|lhs - rhs - boundary|``, the panel count used and
    the propagation budget.  With ``panels=None`` the composite Gauss-Legendre
    rule is refined by doubling until both integrals change by less than
    ``quad_tol``.
    """
    cfg.validate(pot.bandwidth)
    N = cfg.N
    if abs(-n - l) > N - cfg.B or abs(n) > N - cfg.B:
        raise ValueError("the crossing pair must lie inside the unbuffered range")
    if state is None:
        state = FiberState.random(N, np.random.default_rng(seed), support=N // 2)
    a, b = l / 2 - 0.25, l / 2 + 0.25
    rows = _IBPRows(n, l, pot, N)
    if pot.is_zero:
        return dict(lhs=0j, rhs=0j, boundary=0j, residual=0.0, panels=0, budget=0.0)
    if panels is not None:
        lhs, rhs, bnd, budget = _ibp_pass(rows, state.amps, pot, cfg, a, b, order, panels)
    else:
        panels = 1
        prev = _ibp_pass(rows, state.amps, pot, cfg, a, b, order, panels)
        while True:
            panels *= 2
            if panels > max_panels:
                raise QuadratureError(f"quadrature did not reach quad_tol={quad_tol} with {max_panels} panels")
            cur = _ibp_pass(rows, state.amps, pot, cfg, a, b, order, panels)
            if abs(cur[0] - prev[0]) + abs(cur[1] - prev[1]) <= quad_tol:
                break
            prev = cur
        lhs, rhs, bnd, budget = cur
    return dict(
        lhs=complex(lhs),
        rhs=complex(rhs),
        boundary=complex(bnd),
        residual=float(abs(lhs - rhs - bnd)),
        panels=panels,
        budget=budget,
    )


def ibp_residual(n, l, pot, cfg, quad_tol=1e-10, **kw):
    """Norm of the difference of the two sides of the integration-by-parts identity."""
    return ibp_sides(n, l, pot, cfg, quad_tol=quad_tol, **kw)["residual"]


def backscatter_symmetric_part(n, l, t, pot):
    """Backscattering sum ``sum_p |Vhat(p)|^2 / (p (p + s))`` with ``s = 2n + 2t``.

    The sum runs over the support of ``Vhat`` without ``0`` and ``+-(2n+l)``.
    Returns ``(raw, symmetric)``; ``symmetric`` sums the even-in-``p`` part
    ``|Vhat(p)|^2 / (p^2 - s^2)`` instead, which agrees with ``raw`` because
    ``|Vhat(p)| = |Vhat(-p)|``.
    """
    _check_interval(l, t)
    s = 2 * n + 2 * t
    skip = {0, 2 * n + l, -(2 * n + l)}
    raw, sym = [], []
    for p, v in pot.coeffs.items():
        if p in skip:
            continue
        if abs(p + s) < 1e-12 or abs(p - s) < 1e-12:
            raise ValueError(f"denominator vanishes at p={p} (s={s})")
        w = abs(v) ** 2
        raw.append(w / (p * (p + s)))
        sym.append(w / (p * p - s * s))
    return math.fsum(raw), math.fsum(sym)
