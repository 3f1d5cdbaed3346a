"""Classical fixed-step Runge-Kutta integration."""
from __future__ import annotations

import numpy as np

from .errors import NumericError


def rk4_step(rhs, y, t: float, dt: float) -> np.ndarray:
    """One RK4 step of ``y' = rhs(t, y)``; raises NumericError on non-finite stages."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = rhs(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = rhs(t + dt, y + dt * k3)
    y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # any non-finite stage propagates into y_next
    if not np.isfinite(y_next).all():
        raise NumericError(f"non-finite derivative near t={t:.6g}", t=t)
    return y_next


def integrate(rhs, y0, t0: float, dt: float, n_steps: int) -> np.ndarray:
    """Fixed-step RK4 returning the (n_steps + 1) x dim array of states."""
    y = np.asarray(y0, dtype=float)
    out = np.empty((n_steps + 1,) + y.shape)
    out[0] = y
    for k in range(n_steps):
        y = rk4_step(rhs, y, t0 + k * dt, dt)
        out[k + 1] = y
    return out
