import math

import numpy as np
import pytest

from starkwannier import (
    ConfigError,
    DegenerateFitError,
    DeviationReport,
    ExperimentSpec,
    FiberState,
    FourierPotential,
    PropagatorConfig,
    acceleration_persistence,
    bound_state_probe,
    decay_exponent_fit,
    deviation_scan,
)
from starkwannier.experiments import (
    geometric_grid,
    scan_cells,
    tail_sum,
    time_grid,
    weight,
    window_ensemble,
    window_parseval,
)


def cos_spec(lam, **kw):
    return ExperimentSpec(name="t", potential=FourierPotential.cosine({1: 2.0}), lam=lam, **kw)


def synthetic(ns, devs):
    return [DeviationReport(n=n, t=1.0, dev_norm=d, err=1e-12, k_samples=1) for n, d in zip(ns, devs)]


def test_time_grid_contains_crossing_points():
    grid = time_grid(3.0, refine=2)
    for l in range(7):
        for t in (l / 2 - 0.25, l / 2, l / 2 + 0.25):
            if 0 <= t <= 3.0:
                assert np.any(np.isclose(grid, t, atol=1e-15))
    assert grid[0] == 0 and grid[-1] == 3.0
    assert np.all(np.diff(grid) > 0)
    neg = time_grid(-2.3, refine=1)
    assert neg[-1] == -2.3 and np.all(np.diff(neg) < 0)


def test_geometric_grid():
    g = geometric_grid(8.0)
    assert g[0] == 0 and g[-1] == 8.0
    np.testing.assert_allclose(g[2:] / g[1:-1], 2.0)


def test_spec_invariants():
    with pytest.raises(ValueError):
        cos_spec(-0.1)
    spec = cos_spec(0.25, n_list=(40,), cfg=PropagatorConfig(N=30, B=4))
    with pytest.raises(ConfigError, match="N - buffer"):
        spec.config_for(40)


def test_zero_potential_scan():
    spec = ExperimentSpec("free", FourierPotential.zero(), n_list=(2, 5), t_max=3.0, k_grid=3)
    for r in deviation_scan(spec):
        assert r.dev_norm <= r.err
        assert r.valid and r.k_samples == 3


def test_monotone_trend_in_n():
    spec = cos_spec(0.25, n_list=(4, 32), t_max=8.0, k_grid=3)
    r4, r32 = deviation_scan(spec)
    assert r32.dev_norm + r32.err < r4.dev_norm - r4.err
    assert r4.dev_norm == pytest.approx(0.0847013302, rel=1e-6)


def test_linear_response_at_small_coupling():
    a = deviation_scan(cos_spec(0.05, n_list=(8, 16), t_max=4.0, k_grid=3))
    b = deviation_scan(cos_spec(0.1, n_list=(8, 16), t_max=4.0, k_grid=3))
    for ra, rb in zip(a, b):
        assert ra.dev_norm == pytest.approx(0.5 * rb.dev_norm, rel=0.2)


def test_workers_do_not_change_results():
    spec = cos_spec(0.25, n_list=(4, 6), t_max=1.0, k_grid=2)
    serial = scan_cells(spec)
    parallel = scan_cells(ExperimentSpec(**{**spec.__dict__, "workers": 2}))
    assert serial == parallel


def test_fit_exact_power_law():
    ns = [4, 6, 8, 12, 16, 24, 32]
    exponent, ci = decay_exponent_fit(synthetic(ns, [3 / n for n in ns]))
    assert exponent == pytest.approx(1.0, abs=1e-6)
    assert ci < 1e-6
    exponent, _ = decay_exponent_fit(synthetic(ns, [0.4] * len(ns)))
    assert exponent == pytest.approx(0.0, abs=1e-9)


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateFitError):
        decay_exponent_fit(synthetic([1, 2, 3, 4], [1, 1, 1, 1]))
    floor = [DeviationReport(n=n, t=0, dev_norm=1e-14, err=1e-12, k_samples=1) for n in range(1, 6)]
    with pytest.raises(DegenerateFitError, match="error floor"):
        decay_exponent_fit(floor)
    bad = synthetic(range(1, 6), [1.0] * 5)
    bad[0] = DeviationReport(n=1, t=0, dev_norm=1.0, err=0, k_samples=1, valid=False)
    with pytest.raises(DegenerateFitError):
        decay_exponent_fit(bad)


def test_acceleration_trivial_cases():
    free = ExperimentSpec("free", FourierPotential.zero(), n_list=(6, 3, 9), t_max=2.0, k_grid=2)
    assert acceleration_persistence(free, 0.1) == 3
    spec = cos_spec(0.25, n_list=(8,), t_max=1.0, k_grid=2)
    assert acceleration_persistence(spec, 0.0) is None
    with pytest.raises(ValueError):
        acceleration_persistence(spec, 1.5)


def test_bound_state_probe_free_window_state():
    spec = ExperimentSpec(
        "free", FourierPotential.zero(), n_list=(5,), t_max=8.0, k_grid=3, cfg=PropagatorConfig(N=20, B=4)
    )
    res = bound_state_probe(window_ensemble(5, 20, 3), spec)[5]
    np.testing.assert_allclose(res.values, 1.0, atol=1e-15)
    assert not res.decaying


def test_bound_state_probe_random_free_state_constant():
    rng = np.random.default_rng(4)
    spec = ExperimentSpec(
        "free", FourierPotential.zero(), n_list=(-2, 0, 3), t_max=4.0, k_grid=2, cfg=PropagatorConfig(N=16, B=4)
    )
    states = [FiberState.random(16, rng, k=j / 2) for j in range(2)]
    for n, res in bound_state_probe(states, spec).items():
        np.testing.assert_allclose(res.values, res.values[0], rtol=1e-14)


def test_bound_state_probe_high_momentum_not_decaying():
    spec = cos_spec(0.05, n_list=(24,), t_max=8.0, k_grid=3)
    cfg = spec.config_for(24)
    res = bound_state_probe(window_ensemble(24, cfg.N, 3), spec)[24]
    assert not res.decaying and not res.inconclusive
    assert res.values.min() > 0.99


def test_window_parseval():
    state = FiberState.random(50, np.random.default_rng(9))
    total, norm2 = window_parseval(state)
    assert abs(total - norm2) <= 1e-12


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_tail_sum(beta):
    for n in (1, 2, 7, 30):
        L = 200000
        direct = math.fsum((2 * n + l) ** -beta for l in range(L))
        # Euler-Maclaurin estimate of the remainder beyond L terms
        x = 2 * n + L
        remainder = x ** (1 - beta) / (beta - 1) + 0.5 * x**-beta
        assert tail_sum(n, beta) == pytest.approx(direct + remainder, rel=1e-12)
    ratios = [tail_sum(n, beta) / weight(n) ** (1 - beta) for n in range(1, 101)]
    assert max(ratios) <= 2 ** (1 - beta) / (beta - 1) + 2.0 ** -beta
