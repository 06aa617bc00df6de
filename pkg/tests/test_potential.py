import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starkwannier import (
    AliasingError,
    FourierPotential,
    apply_convolution,
    coefficients_from_samples,
    sample_real_space,
    sobolev_norm,
)
from starkwannier.errors import TruncationError
from starkwannier.lattice import FiberState

S2P = math.sqrt(2 * math.pi)


def two_cos():
    return FourierPotential({1: S2P, -1: S2P})


@st.composite
def potentials(draw, max_bw=5):
    bw = draw(st.integers(1, max_bw))
    coeffs = {}
    for m in range(1, bw + 1):
        re = draw(st.floats(-2, 2, allow_nan=False))
        im = draw(st.floats(-2, 2, allow_nan=False))
        coeffs[m] = complex(re, im)
    return FourierPotential.from_positive(coeffs)


def test_hermitian_symmetry_enforced():
    with pytest.raises(ValueError, match="Hermitian symmetry"):
        FourierPotential({1: 1.0, -1: 0.5})
    pot = FourierPotential({1: 1.0, -1: 0.5}, check=False)
    assert pot.hermitian_defect() == pytest.approx(0.5)


def test_mean_is_removed_into_offset():
    pot = FourierPotential({0: 2 * S2P, 1: 1.0, -1: 1.0})
    assert 0 not in pot.coeffs
    assert pot.offset == pytest.approx(2.0)
    assert pot.bandwidth == 1


def test_cosine_constructor():
    pot = FourierPotential.cosine({1: 2.0, 2: 1.0})
    assert pot.coefficient(1) == pytest.approx(S2P)
    assert pot.coefficient(-2) == pytest.approx(S2P / 2)


@pytest.mark.parametrize(
    "alpha, expected",
    [(0, math.sqrt(4 * math.pi)), (1, math.sqrt(8 * math.pi))],
)
def test_sobolev_norm_two_cos(alpha, expected):
    assert sobolev_norm(two_cos(), alpha) == pytest.approx(expected, rel=1e-14)
    assert sobolev_norm(two_cos(), alpha) == pytest.approx([3.5449077, 5.0132565][alpha], rel=1e-7)


def test_sobolev_norm_zero_and_negative_alpha():
    assert sobolev_norm(FourierPotential.zero(), 3.0) == 0.0
    with pytest.raises(ValueError):
        sobolev_norm(two_cos(), -0.5)


@given(potentials(), st.floats(0, 3), st.floats(0, 3))
def test_sobolev_norm_monotone(pot, a, b):
    lo, hi = sorted((a, b))
    assert sobolev_norm(pot, lo) <= sobolev_norm(pot, hi) * (1 + 1e-15)


def test_convolution_two_cos_unit_mass():
    out = apply_convolution(two_cos(), FiberState.unit(0, 5))
    expected = np.zeros(11)
    expected[[4, 6]] = 1.0
    np.testing.assert_allclose(out.amps, expected, atol=1e-15)
    assert out.leak == 0.0


def test_convolution_shifts_kernel():
    pot = FourierPotential.from_positive({1: 0.3 + 0.1j, 2: -0.7j})
    out = apply_convolution(pot, FiberState.unit(3, 8))
    for m in (-2, -1, 1, 2):
        assert out.amplitude(3 + m) == pytest.approx(pot.coefficient(m) / S2P, abs=1e-15)
    mask = np.ones(17, bool)
    mask[[3 + m + 8 for m in (-2, -1, 1, 2)]] = False
    assert np.all(out.amps[mask] == 0)


def test_convolution_zero_potential():
    state = FiberState.random(6, np.random.default_rng(1))
    out = apply_convolution(FourierPotential.zero(), state)
    assert np.all(out.amps == 0)


def test_convolution_reports_leakage_and_truncation():
    out = apply_convolution(two_cos(), FiberState.unit(5, 5))
    assert out.leak == pytest.approx(1.0)
    big = FourierPotential.cosine({3: 1.0})
    with pytest.raises(TruncationError):
        apply_convolution(big, FiberState.unit(0, 8), buffer=2)


@settings(max_examples=40)
@given(potentials(), st.integers(0, 2**32 - 1))
def test_convolution_fft_direct_and_matrix_agree(pot, seed):
    N = 12
    state = FiberState.random(N, np.random.default_rng(seed))
    direct = apply_convolution(pot, state)
    fft = apply_convolution(pot, state, method="fft")
    np.testing.assert_allclose(fft.amps, direct.amps, atol=1e-12)
    np.testing.assert_allclose(pot.matrix(N) @ state.amps, direct.amps, atol=1e-12)


@settings(max_examples=40)
@given(potentials(), st.integers(0, 2**32 - 1))
def test_convolution_hermitian(pot, seed):
    rng = np.random.default_rng(seed)
    N = 16
    phi = FiberState.random(N, rng, support=N - pot.bandwidth)
    psi = FiberState.random(N, rng, support=N - pot.bandwidth)
    lhs = np.vdot(phi.amps, apply_convolution(pot, psi).amps)
    rhs = np.vdot(apply_convolution(pot, phi).amps, psi.amps)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, pot.max_abs())


@settings(max_examples=30)
@given(potentials(max_bw=4))
def test_row_norm_bound(pot):
    N = 12
    rows = np.linalg.norm(pot.matrix(N)[pot.bandwidth : 2 * N + 1 - pot.bandwidth], axis=1)
    target = sobolev_norm(pot, 0) / S2P
    np.testing.assert_allclose(rows, target, rtol=1e-13)
    assert np.all(rows <= sobolev_norm(pot, 0))


@pytest.mark.parametrize("x, expected", [(0.0, 2.0), (math.pi / 2, 0.0), (math.pi, -2.0)])
def test_sample_real_space_two_cos(x, expected):
    assert sample_real_space(two_cos(), x) == pytest.approx(expected, abs=1e-12)


@given(potentials(), st.floats(-20, 20))
def test_sample_real_space_periodic(pot, x):
    assert sample_real_space(pot, x) == pytest.approx(sample_real_space(pot, x + 2 * math.pi), abs=1e-12)


def test_coefficients_from_samples_harmonics():
    x = 2 * math.pi * np.arange(64) / 64
    pot, offset = coefficients_from_samples(2 * np.cos(x))
    assert offset == pytest.approx(0.0, abs=1e-14)
    assert set(pot.coeffs) == {1, -1}
    assert abs(pot.coefficient(1) - S2P) < 1e-10

    pot2, _ = coefficients_from_samples(2 * np.cos(x) + np.cos(2 * x))
    assert abs(pot2.coefficient(-1) - S2P) < 1e-10
    assert abs(pot2.coefficient(2) - S2P / 2) < 1e-10


def test_coefficients_from_constant_samples():
    pot, offset = coefficients_from_samples(np.full(32, 1.75))
    assert pot.is_zero
    assert offset == pytest.approx(1.75)


def test_coefficients_aliasing():
    with pytest.raises(AliasingError):
        coefficients_from_samples(np.zeros(9), bandwidth=5)
    coefficients_from_samples(np.zeros(9), bandwidth=4)


@settings(max_examples=30)
@given(potentials(max_bw=6))
def test_sample_round_trip(pot):
    M = 31
    x = 2 * math.pi * np.arange(M) / M
    samples = sample_real_space(pot, x)
    back, offset = coefficients_from_samples(samples)
    np.testing.assert_allclose(sample_real_space(back, x) + offset, samples, atol=1e-10)
