"""Time steppers shared by the lattice propagator and the crossing analysis.

``embedded_rk`` runs an explicit embedded Runge-Kutta pair (Dormand-Prince
8(5,3) by default, or the classic 5(4) pair) on complex states through a
list of output times that are hit exactly.  The local error estimate of
each accepted step is kept below ``tol * |h|`` and summed into a budget,
so the accumulated budget is at most ``tol`` per unit time.

``magnus4_su2`` integrates ``i c' = A(t) c`` for traceless Hermitian 2x2
``A`` with the fourth order two-point Magnus scheme; each step applies an
exact SU(2) exponential so the norm is preserved to rounding.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _dop853
from .errors import StepUnderflow

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class _Pair:
    c: np.ndarray
    a: np.ndarray  # rows 0..s, row s holds the propagating weights
    stages: int
    exponent: float
    e5: np.ndarray
    e3: np.ndarray = None


_DOPRI5 = _Pair(
    c=np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0]),
    a=np.array(
        [
            [0, 0, 0, 0, 0, 0, 0],
            [1 / 5, 0, 0, 0, 0, 0, 0],
            [3 / 40, 9 / 40, 0, 0, 0, 0, 0],
            [44 / 45, -56 / 15, 32 / 9, 0, 0, 0, 0],
            [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0, 0],
            [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0, 0],
            [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0],
        ]
    ),
    stages=6,
    exponent=1 / 5,
    e5=np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]),
)

_DOP853 = _Pair(
    c=_dop853.C,
    a=_dop853.A,
    stages=_dop853.N_STAGES,
    exponent=1 / 8,
    e5=_dop853.E5,
    e3=_dop853.E3,
)

PAIRS = {"dopri5": _DOPRI5, "dop853": _DOP853}


class StepStats:
    """Counters and the accumulated local-error budget of one integration."""

    __slots__ = ("accepted", "rejected", "budget")

    def __init__(self):
        self.accepted = 0
        self.rejected = 0
        self.budget = 0.0

    def __repr__(self):
        return f"StepStats(accepted={self.accepted}, rejected={self.rejected}, budget={self.budget:.3e})"


def _error(pair, K, step):
    e5 = float(np.linalg.norm(step * np.tensordot(pair.e5, K, axes=(0, 0))))
    if pair.e3 is None:
        return e5
    e3 = float(np.linalg.norm(step * np.tensordot(pair.e3, K, axes=(0, 0))))
    denom = e5 * e5 + 0.01 * e3 * e3
    return 0.0 if denom == 0 else e5 * e5 / math.sqrt(denom)


def embedded_rk(f, t0, y0, stops, tol, h_max=math.inf, method="dop853", h0=None, on_stop=None):
    """Integrate ``y' = f(t, y)`` from ``t0`` through the sorted ``stops``.

    ``stops`` must be monotone in the direction of integration.  At each
    stop ``on_stop(t, y, stats)`` is called if given.  Returns the final
    state and the ``StepStats``.
    """
    pair = PAIRS[method]
    s = pair.stages
    stops = [float(x) for x in stops]
    y = np.array(y0, dtype=complex, copy=True)
    stats = StepStats()
    if not stops:
        return y, stats
    direction = 1.0 if stops[-1] >= t0 else -1.0
    h_max = abs(h_max)
    t = float(t0)
    K = np.empty((s + 1,) + y.shape, dtype=complex)
    k1 = f(t, y)
    h = min(h_max, abs(stops[-1] - t0) or 1.0, 1e-2) if h0 is None else abs(h0)
    for stop in stops:
        if direction * (stop - t) < 0:
            raise ValueError("stops must be monotone along the integration direction")
        while direction * (stop - t) > 0:
            h = min(h, h_max)
            if h < 1e-13 * max(1.0, abs(t)):
                raise StepUnderflow(f"step size {h:.3e} underflow at t={t:.6g}")
            remaining = abs(stop - t)
            last = h >= remaining
            step = direction * (remaining if last else h)
            K[0] = k1
            for i in range(1, s):
                K[i] = f(t + pair.c[i] * step, y + step * np.tensordot(pair.a[i, :i], K[:i], axes=(0, 0)))
            y_new = y + step * np.tensordot(pair.a[s, :s], K[:s], axes=(0, 0))
            K[s] = f(t + step, y_new)
            err = _error(pair, K, step)
            allowed = tol * abs(step)
            if err <= allowed:
                t = stop if last else t + step
                y = y_new
                k1 = K[s].copy()
                stats.accepted += 1
                stats.budget += err
                # a clipped final step says nothing about the natural step size
                if not last:
                    factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * (allowed / err) ** pair.exponent)
                    h = abs(step) * max(1.0, factor)
            else:
                stats.rejected += 1
                h = abs(step) * max(_MIN_FACTOR, _SAFETY * (allowed / err) ** pair.exponent)
        if on_stop is not None:
            on_stop(t, y, stats)
    return y, stats


def _su2_exp(a, b):
    """``exp(-i K)`` for ``K = [[a, b], [conj b, -a]]`` with real ``a``."""
    r = math.sqrt(a * a + abs(b) ** 2)
    if r == 0.0:
        return np.eye(2, dtype=complex)
    c = math.cos(r)
    s = math.sin(r) / r
    return np.array([[c - 1j * s * a, -1j * s * b], [-1j * s * b.conjugate(), c + 1j * s * a]])


_G = math.sqrt(3.0) / 6.0


def _magnus4_step(coupling, t, h, y):
    """One Magnus-4 step for ``A(t) = [[0, w(t)], [conj w(t), 0]]``.

    ``coupling(t)`` returns the off-diagonal entry ``w``.
    """
    w1 = coupling(t + (0.5 - _G) * h)
    w2 = coupling(t + (0.5 + _G) * h)
    # K = h/2 (A1 + A2) - i sqrt(3)/12 h^2 [A2, A1]; [A2, A1] is diagonal here
    comm = w2 * w1.conjugate() - w1 * w2.conjugate()  # (1,1) entry of [A2, A1]
    a = (-1j * math.sqrt(3.0) / 12.0 * h * h * comm).real
    b = 0.5 * h * (w1 + w2)
    return _su2_exp(a, b) @ y


def magnus4_su2(coupling, t0, t1, y0, tol, h_max=math.inf):
    """Integrate ``i c' = [[0, w], [conj w, 0]] c`` from ``t0`` to ``t1``.

    Step size is chosen by step doubling; a step is accepted when the
    difference between one full step and two half steps, divided by 15,
    is below ``tol * |h|``.  Returns ``(c(t1), stats)``.
    """
    y = np.array(y0, dtype=complex, copy=True)
    stats = StepStats()
    span = t1 - t0
    if span == 0:
        return y, stats
    direction = math.copysign(1.0, span)
    t = t0
    h = min(abs(span), h_max, 1e-2)
    while direction * (t1 - t) > 0:
        h = min(h, h_max)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size {h:.3e} underflow at t={t:.6g}")
        remaining = abs(t1 - t)
        last = h >= remaining
        step = direction * (remaining if last else h)
        full = _magnus4_step(coupling, t, step, y)
        half = _magnus4_step(coupling, t, 0.5 * step, y)
        half = _magnus4_step(coupling, t + 0.5 * step, 0.5 * step, half)
        err = float(np.linalg.norm(full - half)) / 15.0
        allowed = tol * abs(step)
        if err <= allowed:
            t = t1 if last else t + step
            y = half
            stats.accepted += 1
            stats.budget += err
            if not last:
                factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * (allowed / err) ** 0.25)
                h = abs(step) * max(1.0, factor)
        else:
            stats.rejected += 1
            h = abs(step) * max(_MIN_FACTOR, _SAFETY * (allowed / err) ** 0.25)
    return y, stats
