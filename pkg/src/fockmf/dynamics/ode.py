"""Dormand-Prince 5(4) embedded Runge-Kutta pair with adaptive steps.

Works on complex state vectors.  The fifth-order solution is propagated
(local extrapolation); the fourth-order companion only drives step control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Butcher tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class IntegrationError(RuntimeError):
    pass


@dataclass
class OdeSolution:
    t: float
    y: np.ndarray
    steps: int
    rejected: int


def dopri54(f, t0: float, y0, t1: float, rtol: float = 1e-10, atol: float | None = None,
            h0: float | None = None, max_steps: int = 1_000_000) -> OdeSolution:
    """Integrate y' = f(t, y) from t0 to t1."""
    y = np.array(y0, dtype=complex)
    if atol is None:
        atol = rtol * 1e-3
    span = t1 - t0
    if span == 0:
        return OdeSolution(t0, y, 0, 0)
    direction = np.sign(span)
    t = t0
    k = [None] * 7
    k[0] = f(t, y)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.max(np.abs(y) / scale)
        d1 = np.max(np.abs(k[0]) / scale)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(abs(h0), abs(span))
    h_min = 16 * np.finfo(float).eps * max(abs(t0), abs(t1), 1.0)
    steps = rejected = 0
    while direction * (t1 - t) > 0:
        if steps + rejected >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps")
        if h < h_min:
            raise IntegrationError(f"step size underflow at t={t:.6g}")
        last = h >= abs(t1 - t)
        if last:
            h = abs(t1 - t)
        hs = direction * h
        for i in range(1, 7):
            incr = sum(a * k[j] for j, a in enumerate(A[i]) if a != 0.0)
            k[i] = f(t + C[i] * hs, y + hs * incr)
        y_new = y + hs * sum(b * k[j] for j, b in enumerate(B5) if b != 0.0)
        err_vec = hs * sum(e * k[j] for j, e in enumerate(E) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        if err <= 1.0:
            t = t1 if last else t + hs
            y = y_new
            k[0] = k[6]  # first-same-as-last
            steps += 1
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
        else:
            rejected += 1
            factor = max(MIN_FACTOR, SAFETY * err ** -0.2)
        h = h * factor
    return OdeSolution(t, y, steps, rejected)
