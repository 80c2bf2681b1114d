"""Adaptive Dormand-Prince 5(4) integration for complex array-valued states.

One integrator serves the whole package: 2x2 transfer matrices along paths,
the (p, A) isomonodromic flow, and batches of independent systems advanced in
lockstep (the error norm is taken over the full state, so the worst component
controls the step).  States are complex ndarrays of any shape; the right-hand
side receives and returns the same shape.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError

__all__ = ["integrate"]

# Dormand-Prince 5(4) tableau (FSAL)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def integrate(f, y0, t0: float, t1: float, rtol: float = 1e-10, atol: float = 1e-12,
              max_steps: int = 100_000):
    """Integrate dy/dt = f(t, y) from t0 to t1; returns y(t1).

    y0 is a complex ndarray of arbitrary shape (copied, never mutated).
    Raises :class:`ConvergenceError` when the controller underflows the step
    size or exceeds ``max_steps``.
    """
    y = np.array(y0, dtype=complex)
    t = float(t0)
    span = t1 - t0
    if span == 0:
        return y
    direction = 1.0 if span > 0 else -1.0
    h = abs(span)  # first trial step: whole interval, controller shrinks it
    k = [None] * 7
    k[0] = np.asarray(f(t, y), dtype=complex)
    hmin = abs(span) * 1e-14

    for _ in range(max_steps):
        h = min(h, abs(t1 - t))
        if h < hmin:
            raise ConvergenceError("step size underflow in dp45")
        hd = direction * h
        for i in range(1, 7):
            yi = y + hd * sum(a * ki for a, ki in zip(_A[i], k[:i]))
            k[i] = np.asarray(f(t + _C[i] * hd, yi), dtype=complex)
        y5 = y + hd * sum(b * ki for b, ki in zip(_B5, k) if b != 0.0)
        err = hd * sum(e * ki for e, ki in zip(_E, k) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        enorm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
        if enorm <= 1.0:
            t += hd
            y = y5
            k[0] = k[6]  # FSAL
            if abs(t1 - t) <= 1e-14 * abs(span):
                return y
            h *= min(5.0, max(0.2, 0.9 * (enorm + 1e-300) ** -0.2))
        else:
            # rejected: (t, y) unchanged, k[0] stays valid
            h *= max(0.1, 0.9 * enorm**-0.2)
    raise ConvergenceError("dp45 exceeded max_steps")
