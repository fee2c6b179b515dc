"""Holonomy of circle orbits and the almost-homotopy operator ``J_X``.

For a circle generator ``X`` with invariant potential, the holonomy of the
orbit through ``p`` is ``exp(i per(p) Theta(X)(p))``, and the operator

    J_X(a) = i_X  integral_0^per  phi_t^* a  dt

satisfies ``(Q^-1 - 1) a = J_X(d a) + d J_X(a)`` on every degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import forms as F
from .forms import PolarisedForm
from .models import Model, ModelError
from .numerics import (NumericsConfig, TWO_PI, IntegrationError, integrate_interval,
                       rk4_adaptive, rk4_refined, simpson_rule)

HOLONOMY_TRIVIAL = 1e-8
DEFAULT_CONFIG = NumericsConfig()


class HolonomyTrivialError(ValueError):
    """The requested construction needs ``Q != 1`` at the point."""


class NotClosedError(ValueError):
    """Input form is not ``d^nabla``-closed at the point."""


class DivisionObstructionError(ValueError):
    """The function does not vanish where the holonomy is trivial."""


@dataclass(frozen=True)
class OrbitSample:
    base_point: tuple
    generator: int


@dataclass(frozen=True)
class Holonomy:
    value: complex
    period: float
    hamiltonian_value: float
    fixed_point: bool = False


def _circle(model: Model, j: int):
    g = model.generator(j)
    if not g.is_circle:
        raise ModelError(f"X_{j} of the {model.kind.value} model is not a circle generator")
    return g


def default_generator(model: Model) -> int:
    circles = model.circle_generators()
    if not circles:
        raise ModelError(f"the {model.kind.value} model has no circle generator")
    return circles[0]


# --------------------------------------------------------------------------
# holonomy


def holonomy_values(model: Model, j: int, P) -> np.ndarray:
    """Vectorised ``exp(i per Theta(X_j))``; equal to 1 at fixed points."""
    _circle(model, j)
    P = np.asarray(P, dtype=float)
    return np.exp(1j * model.periods(j, P) * model.theta(j, P))


def holonomy_formula(model: Model, orbit: OrbitSample) -> Holonomy:
    j = orbit.generator
    _circle(model, j)
    p = np.asarray(orbit.base_point, dtype=float)
    per = model.period(j, p)
    if per.fixed_point:
        return Holonomy(1.0 + 0j, 0.0, float(model.theta(j, p)), True)
    theta = float(model.theta(j, p))
    return Holonomy(complex(np.exp(1j * per.value * theta)), per.value, theta)


def _transport_rhs(model: Model, j: int, dim: int):
    g = model.generator(j)

    def rhs(t, Y):
        z = Y[..., :dim].real
        v = g.field(z)
        rate = np.sum(model.potential(z) * v, axis=-1)
        out = np.empty_like(Y)
        out[..., :dim] = v
        out[..., dim] = 1j * Y[..., dim] * rate
        return out

    return rhs


def transport_values(model: Model, j: int, P, cfg: NumericsConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Holonomy by RK4 integration of the orbit and of ``df/dt = i f Theta(gamma')``.

    The orbit itself is integrated (not the closed-form flow), so this is an
    independent route to :func:`holonomy_values`.
    """
    _circle(model, j)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    per = model.periods(j, P)
    Y0 = np.concatenate([P, np.ones(P.shape[:-1] + (1,))], axis=-1).astype(complex)
    Y, _ = rk4_refined(_transport_rhs(model, j, model.dim), Y0, per, cfg.ode_tol)
    return Y[..., model.dim]


def holonomy_transport(model: Model, orbit: OrbitSample, cfg: NumericsConfig = DEFAULT_CONFIG) -> Holonomy:
    j = orbit.generator
    p = np.asarray(orbit.base_point, dtype=float)
    per = model.period(j, p)
    theta = float(model.theta(j, p))
    if per.fixed_point:
        return Holonomy(1.0 + 0j, 0.0, theta, True)
    value = complex(transport_values(model, j, p[None, :], cfg)[0])
    return Holonomy(value, per.value, theta)


def first_return_period(model: Model, j: int, p, t_max: float = 4 * np.pi,
                        steps: int = 8192) -> float:
    """Smallest ``t > 0`` with the RK4 orbit back at ``p`` (period oracle)."""
    g = model.generator(j)
    p = np.asarray(p, dtype=float)
    dt = t_max / steps
    z = p.copy()
    rhs = lambda t, y: g.field(y)
    dist = []
    ts = []
    for i in range(1, steps + 1):
        k1 = rhs(0, z)
        k2 = rhs(0, z + 0.5 * dt * k1)
        k3 = rhs(0, z + 0.5 * dt * k2)
        k4 = rhs(0, z + dt * k3)
        z = z + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        diff = z - p
        for c, per in enumerate(model.periodic):
            if per:
                diff[c] = (diff[c] + np.pi) % TWO_PI - np.pi
        dist.append(np.linalg.norm(diff))
        ts.append(i * dt)
    dist = np.array(dist)
    scale = max(np.linalg.norm(p), 1.0)
    for i in range(1, len(dist) - 1):
        if dist[i] <= dist[i - 1] and dist[i] <= dist[i + 1] and dist[i] < 1e-3 * scale:
            # parabola through the three samples around the minimum
            a, b, c = dist[i - 1] ** 2, dist[i] ** 2, dist[i + 1] ** 2
            denom = a - 2 * b + c
            shift = 0.5 * (a - c) / denom if denom > 0 else 0.0
            return ts[i] + shift * dt
    raise IntegrationError("no return to the base point within t_max", float(dist.min()))


# --------------------------------------------------------------------------
# homotopy operator


def homotopy_form(j: int, a: PolarisedForm, cfg: NumericsConfig = DEFAULT_CONFIG) -> PolarisedForm:
    """``J_X(a)`` as a degree ``deg(a) - 1`` form with quadrature coefficients."""
    model = a.model
    _circle(model, j)
    if a.degree == 0:
        raise F.FormError("J_X lowers the degree; degree-0 input has no image")
    contracted = F.interior_product(j, a)
    twisted = a.twisted

    def integrated(fn):
        def coeff(P):
            P = np.asarray(P, dtype=float)
            per = model.periods(j, P)
            theta = model.theta(j, P)

            def integrand(t):
                Pt = model.flow(j, P[..., None, :], t, wrap=False)
                vals = fn(Pt)
                if twisted:
                    vals = vals * np.exp(-1j * t * theta[..., None])
                return vals

            return integrate_interval(integrand, per, cfg.quadrature_steps)
        return coeff

    return contracted.map_coeffs(integrated)


def homotopy_operator(j: int, a: PolarisedForm, p, cfg: NumericsConfig = DEFAULT_CONFIG) -> dict:
    """Coefficients of ``J_X(a)`` at ``p``; zero at fixed points."""
    return homotopy_form(j, a, cfg).evaluate(np.asarray(p, dtype=float))


def holonomy_factor(model: Model, j: int, P) -> np.ndarray:
    """``Q^-1 - 1`` at the points ``P``."""
    return 1.0 / holonomy_values(model, j, P) - 1.0


def homotopy_identity_residual(j: int, a: PolarisedForm, P,
                               cfg: NumericsConfig = DEFAULT_CONFIG) -> float:
    """Max coefficient of ``(Q^-1 - 1) a - J_X(d a) - d J_X(a)`` over ``P``.

    For degree 0 the last term is absent.
    """
    model = a.model
    P = np.asarray(P, dtype=float)
    lhs = holonomy_factor(model, j, P)[..., None] * a.values(P)
    da = F.covariant_derivative(a, cfg)
    rhs = homotopy_form(j, da, cfg).values(P)
    if a.degree >= 1:
        rhs = rhs + F.covariant_derivative(homotopy_form(j, a, cfg), cfg).values(P)
    diff = lhs - rhs
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def exactness_potential_form(j: int, a: PolarisedForm,
                             cfg: NumericsConfig = DEFAULT_CONFIG) -> PolarisedForm:
    """``beta = J_X(a) / (Q^-1 - 1)``, meaningful where ``Q != 1``."""
    model = a.model
    J = homotopy_form(j, a, cfg)
    return J.map_coeffs(lambda c: (lambda P: c(P) / holonomy_factor(model, j, P)))


def exactness_potential(j: int, a: PolarisedForm, p, cfg: NumericsConfig = DEFAULT_CONFIG) -> dict:
    """Potential of a closed form at a point with nontrivial holonomy."""
    model = a.model
    p = np.asarray(p, dtype=float)
    if a.degree == 0:
        raise F.FormError("exactness potential needs degree >= 1")
    factor = holonomy_factor(model, j, p)
    if np.any(np.abs(factor) <= HOLONOMY_TRIVIAL):
        raise HolonomyTrivialError(
            "holonomy-trivial point: Q = 1, no potential from J_X / (Q^-1 - 1)")
    closed = F.max_abs(F.covariant_derivative(a, cfg), p)
    if closed > cfg.eq_tol:
        raise NotClosedError(f"d^nabla a = {closed:.3e} exceeds eq_tol {cfg.eq_tol:.1e}")
    return exactness_potential_form(j, a, cfg).evaluate(p)


def focus_phase_integral(lam, cfg: NumericsConfig = DEFAULT_CONFIG, kind: str = "cos"):
    """Quadrature of ``int_0^2pi exp(-i t lam) cos t dt`` (or ``sin t``)."""
    lam = np.asarray(lam, dtype=float)
    trig = np.cos if kind == "cos" else np.sin
    f = lambda t: np.exp(-1j * t * lam[..., None]) * trig(t)
    return integrate_interval(f, np.full(lam.shape, TWO_PI), cfg.quadrature_steps)


def focus_phase_closed_form(lam, kind: str = "cos"):
    """Closed forms of the two focus-focus phase integrals.

    cos: ``i lam (e^{-2 pi i lam} - 1) / (lam^2 - 1)``;
    sin: ``(e^{-2 pi i lam} - 1) / (lam^2 - 1)``. At ``lam = +-1`` the limits
    are taken. The cos integral is often quoted without the factor ``i``,
    which is harmless in the modulus bounds where it is used.
    """
    lam = np.asarray(lam, dtype=float)
    num = np.exp(-2j * np.pi * lam) - 1.0
    den = lam ** 2 - 1.0
    safe = np.where(np.abs(den) < 1e-12, 1.0, den)
    if kind == "cos":
        val = 1j * lam * num / safe
        limit = np.pi + 0j
    else:
        val = num / safe
        limit = -1j * np.pi * np.sign(lam)
    return np.where(np.abs(den) < 1e-12, limit, val)


# --------------------------------------------------------------------------
# constancy of holonomy along the polarisation


def holonomy_constancy_check(model: Model, j: int, p, delta: float = 1e-2) -> float:
    """Max over generators ``G`` of ``|Q(flow_G(p, +-delta)) - Q(p)|``."""
    p = np.asarray(p, dtype=float)
    q0 = holonomy_values(model, j, p)
    worst = 0.0
    for g in range(1, model.n + 1):
        for t in (delta, -delta):
            q = holonomy_values(model, j, model.flow(g, p, t))
            worst = max(worst, float(np.max(np.abs(q - q0))))
    return worst


def dense_holonomy_witness(model: Model, j: int, P) -> dict:
    """Fraction of the sample ``P`` with nontrivial holonomy for ``X_j``."""
    q = holonomy_values(model, j, P)
    nontrivial = np.abs(q - 1.0) >= HOLONOMY_TRIVIAL
    return {"generator": j, "samples": int(q.size),
            "nontrivial_fraction": float(np.mean(nontrivial))}


# --------------------------------------------------------------------------
# division by Q^-1 - 1


def holonomy_denominator(h, cfg: NumericsConfig = DEFAULT_CONFIG):
    """``int_0^1 exp(-2 pi i t h) dt`` by Simpson quadrature."""
    h = np.asarray(h, dtype=float)
    s, w = simpson_rule(cfg.quadrature_steps)
    return np.sum(np.exp(-2j * np.pi * h[..., None] * s) * w, axis=-1)


class _Level:
    """``h = scale * Theta(X_j)`` with ``Q = exp(2 pi i h)`` and its gradient."""

    def __init__(self, model: Model, j: int):
        g = _circle(model, j)
        self.model, self.j, self.g = model, j, g
        self.scale = g.base_period(model.convention) / TWO_PI

    def h(self, P):
        return self.scale * self.model.theta(self.j, P)

    def grad(self, P):
        # i_X omega = -d Theta(X), so grad Theta(X) = omega X
        X = self.g.field(P)
        return self.scale * np.einsum("ab,...b->...a", self.model.omega, X)


def gradient_flow_limit(model: Model, j: int, P, level=None) -> np.ndarray:
    """Limit points of the gradient flow of ``-(h - m) grad h``.

    ``m`` is the integer nearest to ``h(P)``, so each point flows onto the
    nearby level ``{h = m}`` (or into a fixed point). The flow is integrated in
    the time parameter for which ``h - m`` decays at unit exponential rate,
    which has the same trajectories and limits.
    """
    lev = _Level(model, j)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    d = P.shape[-1]
    m = np.round(lev.h(P)) if level is None else np.broadcast_to(level, P.shape[:-1])
    Y0 = np.concatenate([P, m[..., None]], axis=-1)

    def rhs(Y):
        z, mm = Y[:, :d], Y[:, d]
        Z = lev.grad(z)
        n2 = np.sum(Z * Z, axis=-1)
        coef = np.where(n2 > 1e-300, -(lev.h(z) - mm) / np.where(n2 > 1e-300, n2, 1.0), 0.0)
        out = np.zeros_like(Y)
        out[:, :d] = coef[:, None] * Z
        return out

    def stop(Y):
        z, mm = Y[:, :d], Y[:, d]
        return np.abs(lev.h(z) - mm) < 1e-14 * np.maximum(1.0, np.abs(mm))

    Y = rk4_adaptive(rhs, Y0, stop, tol=1e-9, dt0=0.1, max_iter=5000, dt_max=2.0)
    z, mm = Y[:, :d], Y[:, d]
    Z = lev.grad(z)
    n2 = np.sum(Z * Z, axis=-1)
    polish = n2 > 1e-6
    z[polish] -= ((lev.h(z[polish]) - mm[polish]) / n2[polish])[:, None] * Z[polish]
    return z


def _lagrange_at_zero(nodes, values):
    nodes = np.asarray(nodes, dtype=float)
    total = 0
    for i, xi in enumerate(nodes):
        w = 1.0
        for k, xk in enumerate(nodes):
            if k != i:
                w *= (0.0 - xk) / (xi - xk)
        total = total + w * values[i]
    return total


def holonomy_division(model: Model, f, P, cfg: NumericsConfig = DEFAULT_CONFIG, j: int = None,
                      near: float = 1e-4, delta: float = 1e-3, radius: float = 1e-2) -> np.ndarray:
    """Solve ``f = (Q^-1 - 1) g`` for ``g`` at the points ``P``.

    ``f`` must vanish where ``Q = 1``. Away from that set ``g`` is
    ``(f - lim f o phi_t) / (Q^-1 - 1)`` with ``phi_t`` the gradient flow onto
    the nearest integer level of ``h``. Within ``near`` of an integer level
    the value is the smooth extension, interpolated from six points on a line
    through ``P`` that crosses the level transversally. Raises
    :class:`DivisionObstructionError` when ``f`` does not vanish at the
    limit points.
    """
    j = default_generator(model) if j is None else j
    lev = _Level(model, j)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    h = lev.h(P)
    s = h - np.round(h)
    g = np.empty(P.shape[:-1], dtype=complex)
    far = np.abs(s) > near
    if far.any():
        g[far] = _divide_far(model, lev, f, P[far], cfg)
    close = ~far
    if close.any():
        Pc = P[close]
        Z = lev.grad(Pc)
        n2 = np.sum(Z * Z, axis=-1)
        regular = n2 > 10.0 * delta
        offsets = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
        out = np.empty(Pc.shape[0], dtype=complex)
        if regular.any():
            Pr, Zr, sr = Pc[regular], Z[regular], s[close][regular]
            step = Zr / n2[regular][:, None]
            sig = -sr[:, None] + delta * offsets[None, :]
            pts = Pr[:, None, :] + sig[..., None] * step[:, None, :]
            vals = _divide_far(model, lev, f, pts.reshape(-1, P.shape[-1]), cfg)
            out[regular] = _lagrange_at_zero_rows(sig, vals.reshape(sig.shape))
        if (~regular).any():
            Pf = Pc[~regular]
            Zf = Z[~regular]
            nz = np.linalg.norm(Zf, axis=-1)
            direction = np.zeros_like(Pf)
            direction[:, 0] = 1.0
            ok = nz > 1e-14
            direction[ok] = Zf[ok] / nz[ok][:, None]
            sig = np.broadcast_to(radius * offsets, (Pf.shape[0], offsets.size))
            pts = Pf[:, None, :] + sig[..., None] * direction[:, None, :]
            vals = _divide_far(model, lev, f, pts.reshape(-1, P.shape[-1]), cfg)
            out[~regular] = _lagrange_at_zero_rows(sig, vals.reshape(sig.shape))
        g[close] = out
    return g


def _lagrange_at_zero_rows(sig, vals):
    return np.array([_lagrange_at_zero(sig[r], vals[r]) for r in range(sig.shape[0])])


def _divide_far(model, lev, f, P, cfg):
    z_inf = gradient_flow_limit(model, lev.j, P)
    f_p = np.asarray(f(P), dtype=complex)
    f_lim = np.asarray(f(z_inf), dtype=complex)
    bad = np.abs(f_lim) > cfg.eq_tol * np.maximum(1.0, np.abs(f_p))
    if np.any(bad):
        worst = float(np.max(np.abs(f_lim)))
        raise DivisionObstructionError(
            f"function does not vanish where Q = 1 (|f| = {worst:.3e} on the limit set)")
    return (f_p - f_lim) / holonomy_factor(model, lev.j, P)
