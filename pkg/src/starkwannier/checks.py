"""Built-in identity suite behind ``starkwannier verify``.

Every check runs at a small fixed size and returns a ``CheckResult``.  The
potential used by the dynamical checks can be swapped in, which is how a
corrupted (non-Hermitian) potential is caught.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bloch import PropagatorConfig, propagate, row_deviation
from .crossing import _check_interval, backscatter_symmetric_part, free_hamiltonian_shifted, ibp_sides, twiddle_apply
from .errors import StarkWannierError
from .lattice import FiberState, site_range
from .oracle import DenseConfig, richardson_estimate
from .potential import FourierPotential


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: value={self.value:.3e} bound={self.bound:.3e}"
        return f"{text} ({self.detail})" if self.detail else text


def default_potential():
    return FourierPotential.cosine({1: 0.4, 2: 0.1})


def check_hermitian(pot):
    defect = pot.hermitian_defect()
    bound = 1e-12 * max(1.0, pot.max_abs())
    detail = "" if defect <= bound else "Hermitian symmetry invariant Vhat(-m) = conj Vhat(m) violated"
    return CheckResult("hermitian_symmetry", defect <= bound, defect, bound, detail)


def check_free_exactness(N=8, k=0.25, t=1.0):
    state = FiberState.unit(0, N, k=k).with_amps(np.ones(2 * N + 1, dtype=complex) / math.sqrt(2 * N + 1))
    out = propagate(state, t, FourierPotential.zero(), PropagatorConfig(N=N, B=1))
    x = site_range(N) + k
    exact = state.amps * np.exp(-1j * ((x + t) ** 3 - x ** 3) / 3.0)
    value = float(np.max(np.abs(out.amps - exact)))
    return CheckResult("free_exactness", value <= 1e-12, value, 1e-12)


def check_fiber_covariance(pot, rng, cases=4, N=24, tol=1e-10):
    cfg = PropagatorConfig(N=N, B=4 * max(1, pot.bandwidth), tol=tol)
    worst = 0.0
    for _ in range(cases):
        k = float(rng.uniform(0.0, 1.0))
        s = float(rng.uniform(-0.5, 0.5))
        psi = FiberState.random(N, rng, support=N // 3).amps
        a = propagate(FiberState(k=k, amps=psi, t=s), s + 1.0, pot, cfg)
        b = propagate(FiberState(k=0.0, amps=psi, t=s + k), s + k + 1.0, pot, cfg)
        worst = max(worst, float(np.linalg.norm(a.amps - b.amps)))
    return CheckResult("fiber_covariance", worst < 10 * tol, worst, 10 * tol)


def check_time_reversal(pot, sites=(2, 4), t=1.5, N=24):
    cfg = PropagatorConfig(N=N, B=4 * max(1, pot.bandwidth))
    worst, slack = 0.0, math.inf
    for n in sites:
        d1, e1 = row_deviation(n, t, pot, cfg)
        d2, e2 = row_deviation(-n, -t, pot, cfg)
        bound = e1 + e2 + 1e-12
        gap = abs(d1 - d2)
        worst = max(worst, gap)
        slack = min(slack, bound - gap)
    return CheckResult("time_reversal", slack >= 0, worst, worst + slack)


def check_twiddle(rng, cases=20, N=12, width=3):
    worst = 0.0
    for _ in range(cases):
        A = rng.standard_normal((2 * N + 1,) * 2) + 1j * rng.standard_normal((2 * N + 1,) * 2)
        A = np.triu(np.tril(A, width), -width)
        n = int(rng.integers(0, N // 3))
        l = int(rng.integers(0, 4))
        if 2 * n + l == 0:
            l = 1
        t = float(l / 2 + rng.uniform(-0.25, 0.25))
        _check_interval(l, t)
        tw = twiddle_apply(A, n, l, t)
        d = free_hamiltonian_shifted(n, t, N)
        comm = tw * d[None, :] - d[:, None] * tw
        target = np.zeros_like(A)
        m = site_range(N)
        keep = (m != n) & (m != -n - l)
        target[n + N, keep] = A[n + N, keep]
        worst = max(worst, float(np.max(np.abs(comm - target))))
    return CheckResult("twiddle_commutator", worst <= 1e-12, worst, 1e-12)


def check_pair_identity(pot, n_values=(8, 16), l_values=(0, 1, 3)):
    worst = 0.0
    for n in n_values:
        for l in l_values:
            for t in np.linspace(l / 2 - 0.25, l / 2 + 0.25, 5):
                raw, sym = backscatter_symmetric_part(n, l, float(t), pot)
                worst = max(worst, abs(raw - sym) / max(abs(raw), 1e-300))
    return CheckResult("symmetric_pair_identity", worst <= 1e-12, worst, 1e-12, "relative")


def check_ibp(pot, n=3, l=1, N=None, tol=1e-12, quad_tol=1e-10):
    N = 16 + 8 * max(1, pot.bandwidth) if N is None else N
    cfg = PropagatorConfig(N=N, B=4 * max(1, pot.bandwidth), tol=tol)
    out = ibp_sides(n, l, pot, cfg, quad_tol=quad_tol)
    bound = 10 * (quad_tol + tol)
    return CheckResult("ibp_residual", out["residual"] <= bound, out["residual"], bound)


def check_oracle(pot, rng, N=16, t1=0.5, h=2e-3, tol=1e-10):
    cfg = PropagatorConfig(N=N, B=4 * max(1, pot.bandwidth), tol=tol)
    state = FiberState.random(N, rng, k=0.3, support=N // 3)
    fast = propagate(state, t1, pot, cfg)
    ref, est = richardson_estimate(state, t1, pot, DenseConfig(N, h))
    gap = float(np.linalg.norm(fast.amps - ref.amps))
    bound = fast.err + est + 1e-12
    return CheckResult("oracle_cross_validation", gap <= bound, gap, bound)


def run_suite(pot=None, seed=0):
    """Run every check; returns the list of results in a fixed order."""
    pot = default_potential() if pot is None else pot
    rng = np.random.default_rng(seed)
    results = [check_hermitian(pot)]
    if not results[0].passed:
        # the dynamical checks assume a self-adjoint coupling
        return results
    checks = [
        ("free_exactness", check_free_exactness),
        ("fiber_covariance", lambda: check_fiber_covariance(pot, rng)),
        ("time_reversal", lambda: check_time_reversal(pot)),
        ("twiddle_commutator", lambda: check_twiddle(rng)),
        ("symmetric_pair_identity", lambda: check_pair_identity(pot)),
        ("ibp_residual", lambda: check_ibp(pot)),
        ("oracle_cross_validation", lambda: check_oracle(pot, rng)),
    ]
    for name, check in checks:
        try:
            results.append(check())
        except StarkWannierError as exc:
            results.append(CheckResult(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return results
