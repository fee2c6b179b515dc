"""Shared numerical kernels: finite differences, periodic-interval quadrature
and Runge-Kutta stepping.

Everything here is vectorised over leading array axes so that sweeps over
sample points run as a single numpy evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


class IntegrationError(RuntimeError):
    """Raised when an ODE integration fails to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class NumericsConfig:
    """Step sizes and tolerances used by the differential operators.

    ``fd_step`` is the base step of the Richardson-extrapolated central
    difference (fourth order), ``quadrature_steps`` the number of composite
    Simpson intervals over one period.
    """

    fd_step: float = 1e-3
    quadrature_steps: int = 2048
    ode_tol: float = 1e-10
    eq_tol: float = 1e-6

    def __post_init__(self):
        for name in ("fd_step", "ode_tol", "eq_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.quadrature_steps < 16:
            raise ValueError("quadrature_steps must be at least 16")


def central_difference(g: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    """Derivative of ``g`` at 0, Richardson-extrapolated central difference.

    Combining steps ``h`` and ``h/2`` cancels the h^2 term, so the error is
    O(h^4) in truncation and O(eps/h) in rounding.
    """
    d_h = (g(h) - g(-h)) / (2.0 * h)
    h2 = 0.5 * h
    d_h2 = (g(h2) - g(-h2)) / (2.0 * h2)
    return (4.0 * d_h2 - d_h) / 3.0


def simpson_rule(intervals: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0, 1] and composite Simpson weights for an even interval count."""
    if intervals % 2:
        intervals += 1
    nodes = np.linspace(0.0, 1.0, intervals + 1)
    weights = np.ones(intervals + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= 1.0 / (3.0 * intervals)
    return nodes, weights


def integrate_interval(f: Callable[[np.ndarray], np.ndarray], length: np.ndarray,
                       intervals: int) -> np.ndarray:
    """Integrate ``f`` over [0, length] with composite Simpson.

    ``f`` receives node times with a trailing node axis, shape
    ``length.shape + (intervals + 1,)``, and must return values of the same
    shape. ``length`` may vary per point (zero length gives zero).
    """
    s, w = simpson_rule(intervals)
    length = np.asarray(length, dtype=float)
    t = length[..., None] * s
    values = f(t)
    return length * np.sum(values * w, axis=-1)


def rk4_step(rhs, t, y, dt):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def rk4_fixed(rhs, y0: np.ndarray, t_end: np.ndarray, steps: int) -> np.ndarray:
    """Classical RK4 from 0 to ``t_end`` with a fixed number of steps.

    ``t_end`` broadcasts against the leading axes of ``y0`` so that every
    sample point may integrate over its own interval.
    """
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
    t_end = np.asarray(t_end, dtype=float)
    dt = (t_end / steps)[..., None]
    t = np.zeros_like(dt)
    for _ in range(steps):
        y = rk4_step(rhs, t, y, dt)
        t = t + dt
    return y


def rk4_refined(rhs, y0, t_end, tol: float, start_steps: int = 64,
                max_steps: int = 1 << 16) -> tuple[np.ndarray, int]:
    """RK4 with step-count doubling until successive results agree to ``tol``.

    Returns the final state and the step count used. Raises
    :class:`IntegrationError` when ``max_steps`` is exhausted.
    """
    steps = start_steps
    prev = rk4_fixed(rhs, y0, t_end, steps)
    while True:
        steps *= 2
        cur = rk4_fixed(rhs, y0, t_end, steps)
        # Richardson estimate of the error of `cur` for a 4th order method
        err = float(np.max(np.abs(cur - prev))) / 15.0 if cur.size else 0.0
        if err <= tol:
            return cur, steps
        if steps >= max_steps:
            raise IntegrationError("RK4 step doubling did not converge", err)
        prev = cur


def rk4_adaptive(rhs, y0: np.ndarray, stop: Callable[[np.ndarray], np.ndarray],
                 tol: float = 1e-12, dt0: float = 1e-2, max_iter: int = 20000,
                 dt_max: float = 1e12) -> np.ndarray:
    """Autonomous RK4 with per-row step-doubling error control.

    Rows of ``y0`` (shape ``(m, d)``) are advanced independently until
    ``stop(y)`` is true for the row. Steps grow geometrically while the local
    error estimate stays below ``tol`` (relative to the state norm), which
    makes slowly decaying flows reach large times in logarithmically many
    steps.
    """
    y = np.array(y0, dtype=float)
    m = y.shape[0]
    dt = np.full(m, dt0)
    active = ~np.asarray(stop(y), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            return y
        ya = y[active]
        h = dt[active][:, None]
        full = rk4_step(lambda t, z: rhs(z), 0.0, ya, h)
        half = rk4_step(lambda t, z: rhs(z), 0.0, ya, 0.5 * h)
        half = rk4_step(lambda t, z: rhs(z), 0.0, half, 0.5 * h)
        scale = 1.0 + np.linalg.norm(ya, axis=-1)
        err = np.linalg.norm(half - full, axis=-1) / 15.0 / scale
        ok = err <= tol
        idx = np.flatnonzero(active)
        y[idx[ok]] = half[ok]
        grow = np.where(err[ok] < tol / 64.0, 2.0, 1.0)
        dt[idx[ok]] = np.minimum(dt[idx[ok]] * grow, dt_max)
        dt[idx[~ok]] *= 0.5
        active = ~np.asarray(stop(y), dtype=bool)
    raise IntegrationError("adaptive RK4 exceeded its iteration budget",
                           float(np.max(np.abs(rhs(y[active])))) if active.any() else 0.0)
