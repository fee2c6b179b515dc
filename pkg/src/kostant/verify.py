"""Seeded verification suites: each case reports a residual and a tolerance."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import circle_action as C
from . import forms as F
from .bohr_sommerfeld import (Polytope, enumerate_bs_fibres, fibre_point, is_bs_point,
                              lattice_points)
from .models import Convention, ModelSpec, make_model
from .numerics import NumericsConfig, TWO_PI, central_difference

SUITES = ("operators", "holonomy", "homotopy", "division", "bs", "focusfocus")
HOLONOMY_TOL = 1e-8
DIVISION_TOL = 1e-5
EXACTNESS_TOL = 1e-5


@dataclass(frozen=True)
class Case:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)


# --------------------------------------------------------------------------
# random smooth data


class RandomSmooth:
    """Random complex trigonometric sum times a gaussian envelope.

    Frequencies along periodic coordinates are integers, so the function is
    well defined on the chart; other directions get real frequencies.
    """

    def __init__(self, rng, dim, periodic=None, terms=3, max_freq=1.5, width=2.0):
        periodic = tuple(periodic or (False,) * dim)
        self.freqs = rng.uniform(-max_freq, max_freq, size=(terms, dim))
        for c, per in enumerate(periodic):
            if per:
                self.freqs[:, c] = rng.integers(-2, 3, size=terms)
        self.amps = rng.normal(size=terms) + 1j * rng.normal(size=terms)
        self.offsets = rng.uniform(0, TWO_PI, size=terms)
        self.mask = np.array([not p for p in periodic], dtype=float)
        self.width = width

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        arg = P @ self.freqs.T + self.offsets
        env = np.exp(-np.sum((P * self.mask) ** 2, axis=-1) / (2 * self.width ** 2))
        return np.sum(self.amps * np.exp(1j * arg), axis=-1) * env


def random_function(model, rng, **kw) -> RandomSmooth:
    return RandomSmooth(rng, model.dim, model.periodic, **kw)


def random_chart_one_form(model, rng, twisted=True) -> F.PolarisedForm:
    comps = [random_function(model, rng) for _ in range(model.dim)]
    return F.from_chart_one_form(model, lambda P: np.stack([c(P) for c in comps], axis=-1),
                                 twisted)


def random_form(model, degree, rng, twisted=True) -> F.PolarisedForm:
    coeffs = {I: random_function(model, rng)
              for I in itertools.combinations(range(1, model.n + 1), degree)}
    return F.PolarisedForm(model, degree, coeffs, twisted)


def focus_invariants(P):
    P = np.asarray(P, dtype=float)
    x1, x2, y1, y2 = P[..., 0], P[..., 1], P[..., 2], P[..., 3]
    return np.stack([x1 ** 2 + x2 ** 2, y1 ** 2 + y2 ** 2, x1 * y1 + x2 * y2,
                     x1 * y2 - x2 * y1], axis=-1) / 2.0


def invariant_chart_one_form(model, rng) -> F.PolarisedForm:
    """Chart 1-form whose coefficients only depend on rotation invariants."""
    comps = [RandomSmooth(rng, 4) for _ in range(4)]
    return F.from_chart_one_form(
        model, lambda P: np.stack([c(focus_invariants(P)) for c in comps], axis=-1))


def focus_cone_points(rng, m, exclude=1e-3):
    """Points with ``x1 y2 = x2 y1`` (the ``lambda = 0`` locus) away from 0."""
    x = rng.uniform(-2, 2, size=(m, 2))
    s = rng.uniform(-1.5, 1.5, size=(m, 1))
    P = np.concatenate([x, s * x], axis=-1)
    keep = np.linalg.norm(P, axis=-1) > exclude
    return P[keep]


def _models():
    return {"cylinder": make_model(ModelSpec.cylinder()),
            "disk": make_model(ModelSpec.disk()),
            "focus_focus": make_model(ModelSpec.focus_focus())}


# --------------------------------------------------------------------------
# suites


def suite_operators(rng, samples, tol, cfg):
    cases = []
    models = dict(_models())
    models["liouville_2_1"] = make_model(ModelSpec.liouville(2, 1))
    for name, model in models.items():
        P = model.sample(rng, samples)
        s = F.section(model, random_function(model, rng))
        dd = F.covariant_derivative(F.covariant_derivative(s, cfg), cfg)
        res = F.max_abs(dd, P)
        if model.n >= 2:
            a1 = random_form(model, 1, rng)
            res = max(res, F.max_abs(F.covariant_derivative(F.covariant_derivative(a1, cfg), cfg), P))
            a2 = random_form(model, 2, rng)
            ii = F.interior_product(1, F.interior_product(2, a2))
            ii_sym = F.interior_product(1, F.interior_product(1, a2))
            cases.append(Case(f"operators.{name}.interior_squared",
                              max(F.max_abs(ii_sym, P),
                                  F.max_abs(ii + F.interior_product(2, F.interior_product(1, a2)), P)),
                              tol))
        cases.append(Case(f"operators.{name}.d_squared", res, tol))

        a = random_chart_one_form(model, rng) if model.n >= 1 else s
        for label, form in (("section", s), ("one_form", a)):
            for j in range(1, model.n + 1):
                lie = F.lie_derivative(j, form, cfg)
                fd = central_difference(lambda t: F.pullback(j, t, form).values(P), cfg.fd_step)
                cases.append(Case(f"operators.{name}.cartan_vs_pullback.{label}.X{j}",
                                  float(np.max(np.abs(lie.values(P) - fd))), tol))
                t = 0.37
                lhs = F.pullback(j, t, F.covariant_derivative(form, cfg))
                rhs = F.covariant_derivative(F.pullback(j, t, form), cfg)
                cases.append(Case(f"operators.{name}.pullback_commutes.{label}.X{j}",
                                  F.max_abs_difference(lhs, rhs, P), tol))
        # Leibniz: d^nabla(f a) = d_P f ^ a + f d^nabla a
        f = random_function(model, rng)
        fa = F.multiply(f, s)
        lhs = F.covariant_derivative(fa, cfg)
        rhs = F.wedge(F.polarised_derivative(F.function(model, f), cfg), s) + \
            F.multiply(f, F.covariant_derivative(s, cfg))
        cases.append(Case(f"operators.{name}.leibniz", F.max_abs_difference(lhs, rhs, P), tol))
    return cases


def suite_holonomy(rng, samples, tol, cfg):
    cases = []
    cyl = make_model(ModelSpec.cylinder())
    P = cyl.sample(rng, max(samples, 200))
    formula = C.holonomy_values(cyl, 1, P)
    closed = np.exp(TWO_PI * 1j * P[:, 0])
    cases.append(Case("holonomy.cylinder.formula_vs_transport",
                      float(np.max(np.abs(formula - C.transport_values(cyl, 1, P, cfg)))),
                      HOLONOMY_TOL))
    cases.append(Case("holonomy.cylinder.closed_form",
                      float(np.max(np.abs(formula - closed))), HOLONOMY_TOL))

    ff = make_model(ModelSpec.focus_focus())
    P = ff.sample(rng, samples)
    formula = C.holonomy_values(ff, 2, P)
    lam = P[:, 0] * P[:, 3] - P[:, 1] * P[:, 2]
    cases.append(Case("holonomy.focus_focus.formula_vs_transport",
                      float(np.max(np.abs(formula - C.transport_values(ff, 2, P, cfg)))),
                      HOLONOMY_TOL))
    cases.append(Case("holonomy.focus_focus.closed_form",
                      float(np.max(np.abs(formula - np.exp(TWO_PI * 1j * lam)))), HOLONOMY_TOL))

    for conv, factor in ((Convention.TRANSPORT_ORACLE, np.pi), (Convention.PAPER_PRINTED, TWO_PI)):
        disk = make_model(ModelSpec.disk(), conv)
        P = disk.sample(rng, samples)
        F2 = np.sum(P ** 2, axis=-1)
        formula = C.holonomy_values(disk, 1, P)
        cases.append(Case(f"holonomy.disk.{conv.value}.formula_vs_transport",
                          float(np.max(np.abs(formula - C.transport_values(disk, 1, P, cfg)))),
                          HOLONOMY_TOL))
        cases.append(Case(f"holonomy.disk.{conv.value}.closed_form",
                          float(np.max(np.abs(formula - np.exp(1j * factor * F2)))), HOLONOMY_TOL))
    # constancy along the polarisation
    worst = 0.0
    for model in (cyl, ff, make_model(ModelSpec.disk())):
        j = C.default_generator(model)
        for p in model.sample(rng, 10):
            worst = max(worst, C.holonomy_constancy_check(model, j, p))
    cases.append(Case("holonomy.constant_along_polarisation", worst, HOLONOMY_TOL))
    return cases


def suite_homotopy(rng, samples, tol, cfg):
    cases = []
    for name, model in _models().items():
        j = C.default_generator(model)
        worst1 = worst0 = 0.0
        for _ in range(samples):
            p = model.sample(rng, 1)
            a = random_chart_one_form(model, rng)
            worst1 = max(worst1, C.homotopy_identity_residual(j, a, p, cfg))
        for _ in range(max(1, samples // 10)):
            p = model.sample(rng, 4)
            s = F.section(model, random_function(model, rng))
            worst0 = max(worst0, C.homotopy_identity_residual(j, s, p, cfg))
        cases.append(Case(f"homotopy.{name}.one_forms", worst1, tol))
        cases.append(Case(f"homotopy.{name}.sections", worst0, tol))
    cases.extend(exactness_cases(rng, cfg))
    return cases


def non_bs_cylinder_points(rng, m, margin=0.05):
    x = rng.uniform(-2, 2, size=m)
    frac = x - np.round(x)
    x = np.where(np.abs(frac) < margin, x + 2 * margin, x)
    return np.stack([x, rng.uniform(0, TWO_PI, size=m)], axis=-1)


def exactness_cases(rng, cfg, forms=50):
    """Potentials of closed cylinder 1-forms, and refusal at BS points."""
    cyl = make_model(ModelSpec.cylinder())
    worst = 0.0
    for _ in range(forms):
        a = random_chart_one_form(cyl, rng)
        P = non_bs_cylinder_points(rng, 4)
        beta = C.exactness_potential_form(1, a, cfg)
        worst = max(worst, F.max_abs_difference(F.covariant_derivative(beta, cfg), a, P))
        C.exactness_potential(1, a, P[0], cfg)
    refused = 0
    a = random_chart_one_form(cyl, rng)
    for x in (-1.0, 0.0, 2.0):
        try:
            C.exactness_potential(1, a, np.array([x, 0.4]), cfg)
        except C.HolonomyTrivialError:
            refused += 1
    return [Case("homotopy.cylinder.exactness_potential", worst, EXACTNESS_TOL),
            Case("homotopy.cylinder.exactness_refused_at_bs", float(3 - refused), 0.0)]


def division_points(model, rng, m):
    """Random disk points plus points on integer levels of ``h`` and the origin."""
    lev_scale = model.generator(1).base_period(model.convention) / TWO_PI
    P = model.sample(rng, m)
    r = np.sqrt(np.array([1.0, 2.0]) / lev_scale)
    phi = rng.uniform(0, TWO_PI, size=r.size)
    on_level = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    near = on_level * (1 + 1e-7)
    return np.concatenate([P, on_level, near, np.zeros((1, 2)), np.array([[1e-5, 0.0]])])


def suite_division(rng, samples, tol, cfg, factors=10):
    disk = make_model(ModelSpec.disk())
    worst = 0.0
    for _ in range(factors):
        g0 = RandomSmooth(rng, 2)
        f = lambda P, g0=g0: C.holonomy_factor(disk, 1, P) * g0(P)
        P = division_points(disk, rng, max(4, samples // 10))
        worst = max(worst, float(np.max(np.abs(C.holonomy_division(disk, f, P, cfg) - g0(P)))))
    cases = [Case("division.disk.roundtrip", worst, DIVISION_TOL)]
    # f not vanishing on {Q = 1} must be rejected
    try:
        C.holonomy_division(disk, lambda P: np.ones(np.asarray(P).shape[:-1]),
                            np.array([[0.3, 0.2]]), cfg)
        rejected = 1.0
    except C.DivisionObstructionError:
        rejected = 0.0
    cases.append(Case("division.disk.obstruction_detected", rejected, 0.0))
    return cases


def brute_force_lattice(poly: Polytope):
    lo, hi = poly.bounding_box()
    ranges = [range(math.floor(a) - 1, math.ceil(b) + 2) for a, b in zip(lo, hi)]
    interior, boundary = [], []
    for x in itertools.product(*ranges):
        sl = poly.slacks(x)
        if all(s >= 0 for s in sl):
            (interior if all(s > 0 for s in sl) else boundary).append(tuple(x))
    return interior, boundary


def random_polytope(rng) -> Polytope:
    """Integer box with a random rational corner cut (Delzant-type)."""
    d = int(rng.integers(1, 4))
    lo = rng.integers(-4, 1, size=d)
    hi = lo + rng.integers(1, 7 if d < 3 else 5, size=d)
    rows = []
    for i in range(d):
        e = [0] * d
        e[i] = 1
        rows.append(e + [int(-lo[i])])
        e = [0] * d
        e[i] = -1
        rows.append(e + [int(hi[i])])
    if d >= 2 and rng.random() < 0.8:
        c = Fraction(int(np.sum(hi)) * 2 - 1, 2) - Fraction(int(rng.integers(0, 3)))
        rows.append([-1] * d + [c])
    return Polytope.from_rows(rows)


def suite_bs(rng, samples, tol, cfg):
    cases = []
    mismatches = 0
    for _ in range(20):
        poly = random_polytope(rng)
        fast = lattice_points(poly)
        slow = brute_force_lattice(poly)
        mismatches += (sorted(fast[0]) != sorted(slow[0])) + (sorted(fast[1]) != sorted(slow[1]))
    cases.append(Case("bs.lattice_vs_brute_force", float(mismatches), 0.0))

    square = Polytope.from_rows([[1, 0, 0], [-1, 0, 3], [0, 1, 0], [0, -1, 3]])
    interior, boundary = lattice_points(square)
    cases.append(Case("bs.square_counts", float(abs(len(interior) - 4) + abs(len(boundary) - 12)), 0.0))

    wrong = 0
    checks = [(make_model(ModelSpec.cylinder()), {"x": [-2.5, 2.5]}),
              (make_model(ModelSpec.disk()), {"F": [None, 5.5]}),
              (make_model(ModelSpec.disk(), Convention.PAPER_PRINTED), {"F": [None, 3.5]}),
              (make_model(ModelSpec.elliptic(2, 1)), {"F1": [None, 4.5], "x2": [-1.5, 1.5]}),
              (make_model(ModelSpec.liouville(2, 1)), {"x1": [-0.5, 1.5]})]
    for model, window in checks:
        for rec in enumerate_bs_fibres(model, window):
            p = fibre_point(model, rec, rng)
            wrong += not is_bs_point(model, p)
            for j in range(1, model.n + 1):
                wrong += not is_bs_point(model, model.flow(j, p, 0.7))
            for delta in (0.5, -0.5):
                shifted = tuple(None if v is None else v + delta / m.scale
                                for v, m in zip(rec.label, model.moments))
                if any(v is not None and v < 0 and m.elliptic
                       for v, m in zip(shifted, model.moments)):
                    continue
                q = fibre_point(model, type(rec)(shifted, rec.regularity, rec.fibre_dim), rng)
                wrong += is_bs_point(model, q)
    cases.append(Case("bs.lattice_characterisation", float(wrong), 0.0))

    cyl = make_model(ModelSpec.cylinder())
    xs = np.arange(-2500, 2501) * 1e-3
    xs = xs[(xs > -2.5) & (xs < 2.5)]
    scan = [x for x in xs if is_bs_point(cyl, [x, 0.0])]
    labels = [r.label[0] for r in enumerate_bs_fibres(cyl, {"x": [-2.5, 2.5]})]
    cases.append(Case("bs.cylinder_scan_oracle",
                      float(len(scan) != len(labels) or
                            any(abs(a - b) > 1e-9 for a, b in zip(scan, labels))), 0.0))
    return cases


def suite_focusfocus(rng, samples, tol, cfg):
    cases = []
    ff = make_model(ModelSpec.focus_focus())
    P = focus_cone_points(rng, samples)
    worst = 0.0
    for _ in range(10):
        a = invariant_chart_one_form(ff, rng)
        worst = max(worst, F.max_abs(C.homotopy_form(2, a, cfg), P))
    cases.append(Case("focusfocus.invariant_forms_vanish_on_cone", worst, tol))
    worst = 0.0
    for _ in range(5):
        s = F.section(ff, random_function(ff, rng))
        a = F.covariant_derivative(s, cfg)
        worst = max(worst, F.max_abs(C.homotopy_form(2, a, cfg), P))
    cases.append(Case("focusfocus.exact_forms_vanish_on_cone", worst, tol))

    lams = np.array([0.1, 0.5, 1.7])
    quad = C.focus_phase_integral(lams, cfg)
    quoted = lams * (np.exp(-TWO_PI * 1j * lams) - 1) / (lams ** 2 - 1)
    cases.append(Case("focusfocus.phase_integral_modulus",
                      float(np.max(np.abs(np.abs(quad) - np.abs(quoted)))), HOLONOMY_TOL))
    cases.append(Case("focusfocus.phase_integral_signed",
                      float(np.max(np.abs(quad - C.focus_phase_closed_form(lams)))), HOLONOMY_TOL))
    sin_quad = C.focus_phase_integral(lams, cfg, kind="sin")
    cases.append(Case("focusfocus.sine_integral_signed",
                      float(np.max(np.abs(sin_quad - C.focus_phase_closed_form(lams, "sin")))),
                      HOLONOMY_TOL))
    cases.append(Case("focusfocus.phase_integral_zero_at_0",
                      float(abs(C.focus_phase_integral(np.array([0.0]), cfg)[0])), HOLONOMY_TOL))

    disk = make_model(ModelSpec.disk())
    worst = 0.0
    for _ in range(10):
        a = random_chart_one_form(disk, rng)
        J = C.homotopy_form(1, a, cfg)
        worst = max(worst, F.max_abs(J, np.zeros((1, 2))))
        worst = max(worst, F.max_abs(J, np.array([[1e-7, 0.0], [0.0, -1e-7]])))
    cases.append(Case("focusfocus.disk_origin_vanishing", worst, tol))
    return cases


SUITE_FUNCS = {"operators": suite_operators, "holonomy": suite_holonomy,
               "homotopy": suite_homotopy, "division": suite_division, "bs": suite_bs,
               "focusfocus": suite_focusfocus}


def run_suites(suite: str, seed: int = 42, samples: int = 100, tol: float = 1e-6,
               cfg: NumericsConfig = NumericsConfig()) -> list:
    """Cases of ``suite`` (or of every suite for ``all``), sorted by name.

    Each suite draws from its own generator seeded by ``(seed, suite)`` so the
    result of one suite does not depend on which others ran.
    """
    names = SUITES if suite == "all" else (suite,)
    cases = []
    for i, name in enumerate(names):
        if name not in SUITE_FUNCS:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
        rng = np.random.default_rng([seed, SUITES.index(name)])
        cases.extend(SUITE_FUNCS[name](rng, samples, tol, cfg))
    return sorted(cases, key=lambda c: c.name)
