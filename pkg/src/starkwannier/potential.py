"""Periodic potentials given by finitely many Fourier coefficients.

Coefficients follow the unitary convention

    Vhat(m) = (2 pi)^(-1/2) * int_0^{2 pi} exp(-i m x) V(x) dx,

so ``V(x) = (2 pi)^(-1/2) * sum_m Vhat(m) exp(i m x)`` and the potential acts on
the lattice as the convolution ``(V psi)(n) = (2 pi)^(-1/2) sum_m Vhat(n-m) psi(m)``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, TruncationError

log = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FourierPotential:
    """Real 2pi-periodic potential with finite Fourier support.

    ``coeffs`` maps frequency ``m`` to ``Vhat(m)``.  Real potentials satisfy
    ``Vhat(-m) == conj(Vhat(m))``; this is checked on construction unless
    ``check=False``.  A nonzero mean ``Vhat(0)`` is removed and kept in
    ``offset`` as the constant energy shift it represents.
    """

    coeffs: dict
    offset: float = 0.0
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        coeffs = {int(m): complex(v) for m, v in dict(self.coeffs).items() if v != 0}
        offset = self.offset
        if 0 in coeffs:
            shift = coeffs.pop(0) / SQRT_2PI
            log.info("removing mean Vhat(0): energies shifted by %.6g", shift.real)
            offset += shift.real
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "offset", offset)
        if self.check:
            defect = self.hermitian_defect()
            if defect > 1e-12 * max(1.0, self.max_abs()):
                raise ValueError(
                    f"Hermitian symmetry Vhat(-m) = conj Vhat(m) violated (defect {defect:.3e})"
                )

    @classmethod
    def zero(cls):
        return cls({})

    @classmethod
    def from_positive(cls, coeffs):
        """Build from ``{m: Vhat(m)}`` with ``m > 0``; negatives by symmetry."""
        full = {}
        for m, v in dict(coeffs).items():
            m = int(m)
            if m <= 0:
                raise ValueError("only positive frequencies may be listed")
            full[m] = complex(v)
            full[-m] = complex(v).conjugate()
        return cls(full)

    @classmethod
    def cosine(cls, amplitudes):
        """``V(x) = sum_m a_m cos(m x)`` from ``{m: a_m}``."""
        return cls.from_positive({m: a * SQRT_2PI / 2 for m, a in dict(amplitudes).items()})

    @property
    def bandwidth(self):
        return max((abs(m) for m in self.coeffs), default=0)

    @property
    def is_zero(self):
        return not self.coeffs

    def coefficient(self, m):
        return self.coeffs.get(int(m), 0j)

    def max_abs(self):
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def hermitian_defect(self):
        return max(
            (abs(v - self.coefficient(-m).conjugate()) for m, v in self.coeffs.items()),
            default=0.0,
        )

    def scaled(self, lam):
        return FourierPotential({m: lam * v for m, v in self.coeffs.items()}, check=self.check)

    def kernel(self):
        """Lattice kernel ``Vhat(d)/sqrt(2 pi)`` for ``d = -bw..bw``."""
        bw = self.bandwidth
        return np.array([self.coefficient(d) for d in range(-bw, bw + 1)]) / SQRT_2PI

    def matrix(self, N):
        """Dense convolution matrix on the sites ``[-N, N]``."""
        size = 2 * N + 1
        out = np.zeros((size, size), dtype=complex)
        for d, v in self.coeffs.items():
            if abs(d) < size:
                out += np.eye(size, k=-d) * (v / SQRT_2PI)
        return out


def sobolev_norm(pot, alpha):
    """``||V||_alpha = (sum_m |Vhat(m)|^2 (1 + m^2)^alpha)^(1/2)``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return math.sqrt(math.fsum(abs(v) ** 2 * (1.0 + m * m) ** alpha for m, v in pot.coeffs.items()))


def apply_convolution(pot, state, buffer=None, method="direct"):
    """Apply the lattice convolution ``V`` to a fiber state.

    The result lives on the same site range; the mass that the exact
    operator would place outside it is returned in ``leak``.  If ``buffer``
    is given, a bandwidth wider than the buffer raises ``TruncationError``.
    """
    bw = pot.bandwidth
    N = state.N
    if buffer is not None and bw > buffer:
        raise TruncationError(f"potential bandwidth {bw} exceeds buffer width {buffer}")
    if bw > 2 * N:
        raise TruncationError(f"potential bandwidth {bw} exceeds the lattice size {2 * N + 1}")
    if pot.is_zero:
        return state.with_amps(np.zeros_like(state.amps), leak=0.0)

    ker = pot.kernel()
    if method == "direct":
        full = np.zeros(state.amps.size + 2 * bw, dtype=complex)
        for j, v in enumerate(ker):
            if v != 0:
                full[j : j + state.amps.size] += v * state.amps
    elif method == "fft":
        size = state.amps.size + ker.size - 1
        nfft = 1 << (size - 1).bit_length()
        full = np.fft.ifft(np.fft.fft(state.amps, nfft) * np.fft.fft(ker, nfft))[:size]
    else:
        raise ValueError(f"unknown method {method!r}")
    # full[i] belongs to site i - N - bw
    inside = full[bw : bw + state.amps.size]
    leak = math.fsum(np.abs(full[:bw]) ** 2) + math.fsum(np.abs(full[bw + state.amps.size :]) ** 2)
    return state.with_amps(inside, leak=leak)


def sample_real_space(pot, x):
    """Evaluate ``V(x)``; works elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    val = np.zeros_like(x, dtype=complex)
    for m, v in pot.coeffs.items():
        val = val + v * np.exp(1j * m * x)
    val = (val / SQRT_2PI).real
    return float(val) if val.ndim == 0 else val


def coefficients_from_samples(samples, bandwidth=None, drop_below=1e-12):
    """Fourier coefficients of a potential sampled on ``x_j = 2 pi j / M``.

    Returns ``(pot, offset)`` where ``offset`` is the sample mean removed to
    enforce ``Vhat(0) = 0``.  ``bandwidth`` defaults to the Nyquist limit;
    coefficients below ``drop_below`` in magnitude are discarded.
    """
    samples = np.asarray(samples, dtype=float)
    M = samples.size
    nyquist = (M - 1) // 2
    if bandwidth is None:
        bandwidth = nyquist
    if bandwidth > nyquist:
        raise AliasingError(f"bandwidth {bandwidth} exceeds the Nyquist limit {nyquist} of {M} samples")
    spec = np.fft.fft(samples) * (SQRT_2PI / M)
    offset = float(samples.mean())
    coeffs = {}
    for m in range(1, bandwidth + 1):
        v = spec[m]
        if abs(v) > drop_below:
            coeffs[m] = v
            coeffs[-m] = v.conjugate()
    return FourierPotential(coeffs), offset
