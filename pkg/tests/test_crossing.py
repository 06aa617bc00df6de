import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from starkwannier import (
    CrossingEvent,
    FourierPotential,
    NearSingularityError,
    PropagatorConfig,
    backscatter_symmetric_part,
    band_energy,
    crossing_schedule,
    ibp_residual,
    landau_zener_amplitude,
    phase_function,
    stationary_phase_amplitude,
    twiddle_apply,
    two_level_oracle,
)
from starkwannier.crossing import (
    _two_level,
    free_hamiltonian_shifted,
    ibp_sides,
    landau_zener_exact,
    reduced_resolvent,
    resolvent_coupling_norm,
)

S2P = math.sqrt(2 * math.pi)


def single(a, value):
    return FourierPotential.from_positive({a: value})


def test_schedule_n1():
    events = crossing_schedule(1, 2.0, FourierPotential.cosine({1: 2.0}))
    assert [e.t_star for e in events] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert [e.pair for e in events] == [(1, -1), (1, -2), (1, -3), (1, -4), (1, -5)]
    assert all(e.is_degenerate() for e in events)


def test_schedule_excludes_self_crossing():
    events = crossing_schedule(0, 1.0, FourierPotential.zero())
    assert [e.l for e in events] == [1, 2]
    with pytest.raises(ValueError):
        CrossingEvent.build(0, 0, FourierPotential.zero())


def test_out_of_band_coupling_vanishes():
    pot = FourierPotential.cosine({1: 2.0})
    assert CrossingEvent.build(8, 0, pot).coupling == 0
    assert CrossingEvent.build(0, 1, pot).coupling == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 5, 13])
@pytest.mark.parametrize("l", [0, 1, 2, 7])
def test_one_crossing_per_interval(n, l):
    lo, hi = l / 2 - 0.25, l / 2 + 0.25
    # exact sign check at the closed ends of I_l
    for m in range(-60, 61):
        if m == n:
            continue
        before = band_energy(Fraction(n), 0, Fraction(lo)) - band_energy(Fraction(m), 0, Fraction(lo))
        after = band_energy(Fraction(n), 0, Fraction(hi)) - band_energy(Fraction(m), 0, Fraction(hi))
        crosses = before * after < 0
        assert crosses == (m == -n - l)


def test_phase_function_values():
    value, d1, d2 = phase_function(1, 3, 1.5)
    assert d1 == 0
    assert value == pytest.approx(-11.25)
    assert phase_function(8, 0, 0.3)[2] == 32


@given(st.integers(0, 50), st.integers(0, 50), st.floats(-10, 10))
def test_phase_function_derivatives(n, l, t):
    h = 1e-5
    v, d1, d2 = phase_function(n, l, t)
    num = (phase_function(n, l, t + h)[0] - phase_function(n, l, t - h)[0]) / (2 * h)
    assert d1 == pytest.approx(num, rel=1e-6, abs=1e-6 * (1 + abs(v)))
    assert phase_function(n, l, l / 2)[1] == 0


def test_stationary_phase_amplitude_values():
    assert stationary_phase_amplitude(CrossingEvent.build(8, 0, single(16, 0.2))) == pytest.approx(0.2 / math.sqrt(32))
    assert stationary_phase_amplitude(CrossingEvent.build(8, 0, single(16, 0.2))) == pytest.approx(0.035355, abs=1e-6)
    assert stationary_phase_amplitude(CrossingEvent.build(3, 1, FourierPotential.zero())) == 0


def test_two_level_decoupled():
    assert two_level_oracle(CrossingEvent.build(4, 2, FourierPotential.zero())) == 0


def test_two_level_norm_conservation():
    ev = CrossingEvent.build(3, 1, single(7, 0.8))
    _, drift = _two_level(ev, *ev.interval, tol=1e-12)
    assert drift < 1e-12


def test_two_level_window_must_lie_in_interval():
    ev = CrossingEvent.build(3, 1, single(7, 0.8))
    with pytest.raises(ValueError):
        two_level_oracle(ev, window=(0.0, 0.7))


@pytest.mark.parametrize("a", [16, 24, 32, 48])
def test_two_level_matches_fresnel_first_order(a):
    # first order on I_l is |v| |int_{-1/4}^{1/4} exp(i a u^2) du|, a Fresnel integral
    ev = CrossingEvent.build(a // 2, 0, single(a, 0.05))
    z = 0.25 * math.sqrt(2 * a / math.pi)
    C, S = scipy.special.fresnel(z)
    first = abs(ev.coupling) * 2 * math.sqrt(math.pi / (2 * a)) * abs(C + 1j * S)
    assert abs(two_level_oracle(ev)) == pytest.approx(first, rel=1e-4)


def test_two_level_fixture_n8():
    ev = CrossingEvent.build(8, 0, single(16, 0.05))
    x2 = abs(two_level_oracle(ev))
    assert x2 == pytest.approx(0.0095371512376, rel=1e-8)
    assert abs(x2 / stationary_phase_amplitude(ev) - 1) <= 0.15


@pytest.mark.parametrize("a", [16, 24, 32, 48, 64])
def test_complete_crossing_matches_landau_zener(a):
    ev = CrossingEvent.build(a // 2, 0, single(a, 0.05))
    got = abs(landau_zener_amplitude(ev))
    # residual end effects of the finite sweep are O(1/(half_width sqrt(pi a)))
    assert got == pytest.approx(landau_zener_exact(ev), rel=0.03)
    assert got * math.sqrt(a) / abs(ev.coupling * S2P) == pytest.approx(1 / math.sqrt(2), rel=0.15)


def test_twiddle_zero_and_diagonal_entry():
    N, n, l = 10, 3, 2
    assert np.all(twiddle_apply(np.zeros((2 * N + 1,) * 2), n, l, 1.1) == 0)
    A = np.eye(2 * N + 1, k=1)  # A[i, i + 1] = 1 picks the m = n + 1 entry
    tw = twiddle_apply(A, n, l, l / 2)
    assert tw[n + N, n + 1 + N] == pytest.approx(1 / (2 * n + l + 1))
    assert np.count_nonzero(np.delete(tw, n + N, axis=0)) == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_twiddle_commutator_identity(seed):
    rng = np.random.default_rng(seed)
    N, w = 14, int(rng.integers(1, 5))
    A = rng.normal(size=(2 * N + 1, 2 * N + 1)) + 1j * rng.normal(size=(2 * N + 1, 2 * N + 1))
    A = np.triu(np.tril(A, w), -w)
    n = int(rng.integers(0, 5))
    l = int(rng.integers(1 if n == 0 else 0, 5))
    t = l / 2 + rng.uniform(-0.25, 0.25)
    tw = twiddle_apply(A, n, l, t)
    d = free_hamiltonian_shifted(n, t, N)
    comm = tw * d[None, :] - d[:, None] * tw
    target = np.zeros_like(A)
    m = np.arange(-N, N + 1)
    keep = (m != n) & (m != -n - l)
    target[n + N, keep] = A[n + N, keep]
    assert np.max(np.abs(comm - target)) <= 1e-12


def test_twiddle_outside_interval_and_singularity():
    with pytest.raises(ValueError):
        twiddle_apply(np.eye(9), 1, 0, 0.6)
    with pytest.raises(NearSingularityError):
        reduced_resolvent(2, 0, -2.5, 8)


def test_resolvent_bound_scaling():
    pot = FourierPotential.cosine({1: 0.4, 2: 0.2})
    for l in (0, 1, 3):
        scaled = [resolvent_coupling_norm(n, l, l / 2 + 0.1, pot, 2 * n + 20) * (2 * n + l) for n in (4, 8, 16, 32, 64)]
        assert max(scaled) <= 2 * min(scaled)


def test_ibp_zero_potential():
    assert ibp_residual(6, 2, FourierPotential.zero(), PropagatorConfig(N=32, B=4)) == 0.0


def test_ibp_residual_and_refinement():
    pot = FourierPotential.cosine({1: 0.2})
    cfg = PropagatorConfig(N=32, B=4, tol=1e-12)
    out = ibp_sides(6, 2, pot, cfg, quad_tol=1e-10)
    assert out["residual"] <= 10 * (1e-10 + cfg.tol)
    assert abs(out["lhs"]) > 1e-4  # the identity is not satisfied trivially
    r = [ibp_sides(6, 2, pot, cfg, panels=p)["residual"] for p in (1, 2, 4)]
    assert r[1] <= r[0] / 2 and r[2] <= r[1] / 2


def test_backscatter_two_term_example():
    v1 = 0.7
    pot = FourierPotential.from_positive({1: v1})
    raw, sym = backscatter_symmetric_part(4, 4, 2.0, pot)
    assert raw == pytest.approx(v1**2 * (1 / 13 - 1 / 11), rel=1e-14)
    assert raw == pytest.approx(-2 * v1**2 / 143, rel=1e-14)
    assert sym == pytest.approx(raw, rel=1e-14)
    assert backscatter_symmetric_part(4, 4, 2.0, FourierPotential.zero()) == (0.0, 0.0)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(0, 6), st.floats(-0.25, 0.25))
def test_backscatter_pair_sum_oracle(seed, n, l, dt):
    rng = np.random.default_rng(seed)
    coeffs = {p: complex(*rng.normal(size=2)) for p in range(1, int(rng.integers(1, 8)) + 1)}
    pot = FourierPotential.from_positive(coeffs)
    t = l / 2 + dt
    s = 2 * n + 2 * t
    raw, sym = backscatter_symmetric_part(n, l, t, pot)
    # brute force: pair p with -p; each pair contributes +2 |Vhat(p)|^2 / (p^2 - s^2)
    pairs = sum(2 * abs(v) ** 2 / (p * p - s * s) for p, v in coeffs.items() if p != 2 * n + l)
    assert raw == pytest.approx(pairs, rel=1e-12, abs=1e-300)
    assert sym == pytest.approx(raw, rel=1e-12, abs=1e-300)


def test_backscatter_decay_exponent():
    pot = FourierPotential.cosine({1: 0.5, 2: 0.3, 3: 0.1})
    ns = np.array([8, 12, 16, 24, 32, 48, 64])
    l = 1
    sups = [max(abs(backscatter_symmetric_part(n, l, t, pot)[0]) for t in l / 2 + np.linspace(-0.25, 0.25, 21)) for n in ns]
    slope = np.polyfit(np.log(2 * ns + l), np.log(sups), 1)[0]
    assert -slope >= 1.8
