"""Per-degree quantisation dimensions dispatched on the counting theorems.

Each supported fibration type maps to a single nonzero degree (or, for the
almost-toric and focus-focus cases, to finite counts plus explicit
``Unresolved`` blocks). Anything outside the table raises
:class:`NoTheoremError` rather than extrapolating.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import forms as F
from .bohr_sommerfeld import (FOCUS_FOCUS, REGULAR, BSFibreRecord, Polytope,
                              elliptic_singular, enumerate_bs_fibres, lattice_points,
                              nonsingular_count, normalise_window, polytope_fibres)
from .circle_action import DEFAULT_CONFIG, dense_holonomy_witness, homotopy_form
from .forms import PolarisedForm
from .models import Convention, Kind, Model, ModelSpec, make_model, product_factors
from .numerics import NumericsConfig

WITNESS_SAMPLES = 1000
DENSE_FRACTION = 0.99

DISPATCH_TABLE = (
    "cylinder: degree 1, one dimension per BS leaf",
    "disk: degree 1, one dimension per nonsingular BS leaf",
    "linear(n): degree 0, smooth functions on R^n",
    "liouville(n,k): degree k, b_s copies of smooth functions on R^(n-k)",
    "elliptic(n,k): degree n, one dimension per nonsingular BS fibre",
    "focus_focus: H^0 zero, H^1 and H^2 unresolved",
    "product(cylinder or disk, M): degree shift by one, b_s copies of Q(M)",
    "toric_polytope (compact): degree n, interior lattice points",
    "lagrangian_bundle (k >= 1): degree k, BS fibre count",
    "almost_toric4: degree 2 regular count plus unresolved focus-focus blocks",
)


class NoTheoremError(ValueError):
    """The descriptor is outside the dispatch table."""

    def __init__(self, reason: str):
        table = "\n  ".join(DISPATCH_TABLE)
        super().__init__(f"no theorem applies: {reason}\nsupported cases:\n  {table}")
        self.reason = reason


class DescriptorError(ValueError):
    """A fibration descriptor violates its invariants."""


# --------------------------------------------------------------------------
# cohomology entries


@dataclass(frozen=True)
class Zero:
    def __str__(self):
        return "0"


@dataclass(frozen=True)
class FiniteDim:
    count: int

    def __str__(self):
        return f"C^{self.count}"


@dataclass(frozen=True)
class FunctionSpace:
    """``copies`` copies of the smooth functions on ``R^base_dim``."""

    base_dim: int
    copies: int = 1

    def __str__(self):
        return f"C^inf(R^{self.base_dim})^{self.copies}"


@dataclass(frozen=True)
class Unresolved:
    reason: str
    point: Optional[tuple] = None
    multiplicity: int = 1

    def __str__(self):
        where = "" if self.point is None else f" at {self.point}"
        return f"unresolved({self.reason}{where}, x{self.multiplicity})"


@dataclass(frozen=True)
class DirectSum:
    parts: tuple

    def __str__(self):
        return " + ".join(str(p) for p in self.parts)


Entry = Union[Zero, FiniteDim, FunctionSpace, Unresolved, DirectSum]
ZERO = Zero()


def normalise(entry: Entry) -> Entry:
    """Canonical form: empty counts become ``Zero``, ``R^0`` function spaces
    become finite, and sums are flattened with like terms merged."""
    if isinstance(entry, FiniteDim):
        return ZERO if entry.count == 0 else entry
    if isinstance(entry, FunctionSpace):
        if entry.copies == 0:
            return ZERO
        return FiniteDim(entry.copies) if entry.base_dim == 0 else entry
    if isinstance(entry, DirectSum):
        finite = 0
        spaces = {}
        unresolved = []
        stack = list(entry.parts)
        while stack:
            p = normalise(stack.pop(0))
            if isinstance(p, DirectSum):
                stack = list(p.parts) + stack
            elif isinstance(p, FiniteDim):
                finite += p.count
            elif isinstance(p, FunctionSpace):
                spaces[p.base_dim] = spaces.get(p.base_dim, 0) + p.copies
            elif isinstance(p, Unresolved):
                unresolved.append(p)
        parts = [FiniteDim(finite)] if finite else []
        parts += [FunctionSpace(d, c) for d, c in sorted(spaces.items())]
        parts += unresolved
        if not parts:
            return ZERO
        return parts[0] if len(parts) == 1 else DirectSum(tuple(parts))
    return entry


def scale_entry(entry: Entry, copies: int) -> Entry:
    """Direct sum of ``copies`` copies of ``entry``."""
    if copies == 0 or isinstance(entry, Zero):
        return ZERO
    if isinstance(entry, FiniteDim):
        return normalise(FiniteDim(entry.count * copies))
    if isinstance(entry, FunctionSpace):
        return normalise(FunctionSpace(entry.base_dim, entry.copies * copies))
    if isinstance(entry, Unresolved):
        return Unresolved(entry.reason, entry.point, entry.multiplicity * copies)
    return normalise(DirectSum(tuple(scale_entry(p, copies) for p in entry.parts)))


def is_zero(entry: Entry) -> bool:
    return isinstance(normalise(entry), Zero)


# --------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class ModelChart:
    spec: ModelSpec


@dataclass(frozen=True)
class ToricPolytope:
    polytope: Polytope


@dataclass(frozen=True)
class LagrangianBundle:
    """Regular lagrangian fibration over an ``n = base_dim`` dimensional base
    with fibres ``T^k x R^(n-k)`` and ``bs_count`` BS components."""

    fibre_rank_k: int
    base_dim: int
    bs_count: int


@dataclass(frozen=True)
class MarkedPoint:
    point: tuple  # exact fractions
    multiplicity: int = 1


@dataclass(frozen=True)
class AlmostToric4:
    polytope: Polytope
    ff_points: tuple = ()


@dataclass(frozen=True)
class FibrationDescriptor:
    base: Union[ModelChart, ToricPolytope, LagrangianBundle, AlmostToric4]
    compact: bool = False
    zero_fibre_bs: bool = True
    window: Optional[dict] = None
    offsets: Optional[dict] = None

    def validate(self):
        b = self.base
        if isinstance(b, ModelChart):
            b.spec.validate()
        elif isinstance(b, AlmostToric4):
            if b.polytope.dimension != 2:
                raise DescriptorError("almost_toric4: the base polytope must be 2-dimensional "
                                      f"(total dimension 4), got {b.polytope.dimension}")
            for i, mp in enumerate(b.ff_points):
                if mp.multiplicity < 1:
                    raise DescriptorError(f"ff_points[{i}]: multiplicity must be >= 1")
                if len(mp.point) != 2:
                    raise DescriptorError(f"ff_points[{i}]: expected a point in the plane")
        elif isinstance(b, LagrangianBundle):
            if b.fibre_rank_k < 0 or b.base_dim < b.fibre_rank_k:
                raise DescriptorError("lagrangian_bundle: need 0 <= k <= base_dim")
            if b.bs_count < 0:
                raise DescriptorError("lagrangian_bundle: bs_count must be >= 0")
        return self


# --------------------------------------------------------------------------
# reports


@dataclass
class QuantisationReport:
    per_degree: dict
    bs_fibres: list
    convention_notes: list = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)
    h0_witness: Optional[dict] = None
    source: str = ""
    dimension: int = 0  # n, half the manifold dimension

    def entry(self, degree: int) -> Entry:
        return self.per_degree.get(degree, ZERO)

    def nonzero_degrees(self) -> list:
        return [d for d, e in sorted(self.per_degree.items()) if not is_zero(e)]


def _report(n, content: dict, records, source, notes=(), witness=None) -> QuantisationReport:
    per_degree = {d: normalise(content.get(d, ZERO)) for d in range(n + 1)}
    return QuantisationReport(per_degree, list(records), list(notes), {}, witness, source, n)


# --------------------------------------------------------------------------
# H^0 witness


def _sample_window(model: Model, window, rng, m: int) -> np.ndarray:
    """``m`` chart points, preferring those whose moment values lie in the window."""
    win = normalise_window(model, window) if window is not None else None
    pts = []
    kept = 0
    for _ in range(20):
        P = model.sample(rng, 4 * m)
        if win is not None:
            vals = model.moment_map(P)
            ok = np.ones(P.shape[0], dtype=bool)
            for c, name in enumerate(model.moment_names):
                lo, hi = win[name]
                if lo is not None:
                    ok &= vals[:, c] > lo
                if hi is not None:
                    ok &= vals[:, c] < hi
            P = P[ok]
        pts.append(P)
        kept += P.shape[0]
        if kept >= m:
            break
    P = np.concatenate(pts)[:m]
    if P.shape[0] < m:
        P = np.concatenate([P, model.sample(rng, m - P.shape[0])])
    return P


def h0_witness(model: Model, window=None, seed: int = 0, samples: int = WITNESS_SAMPLES):
    """Dense-holonomy witness for ``H^0 = 0``; ``None`` without circle generators."""
    circles = model.circle_generators()
    if not circles:
        return None
    rng = np.random.default_rng(seed)
    P = _sample_window(model, window, rng, samples)
    best = None
    for j in circles:
        w = dense_holonomy_witness(model, j, P)
        if best is None or w["nontrivial_fraction"] > best["nontrivial_fraction"]:
            best = w
    best = dict(best)
    best["seed"] = seed
    best["dense"] = best["nontrivial_fraction"] >= DENSE_FRACTION
    return best


# --------------------------------------------------------------------------
# dispatch


def _convention_notes(model: Model, window, offsets) -> list:
    if not any(m.elliptic for m in model.moments):
        return []
    notes = [f"rotation convention: {model.convention.value}"
             " (transport_oracle: minimal orbit period pi, holonomy exp(i pi F);"
             " paper_printed: parameter period 2 pi, holonomy exp(2 pi i F))"]
    other = Convention.PAPER_PRINTED if model.convention is Convention.TRANSPORT_ORACLE \
        else Convention.TRANSPORT_ORACLE
    a = enumerate_bs_fibres(model, window, offsets)
    b = enumerate_bs_fibres(model.with_convention(other), window, offsets)
    la, lb = [r.label for r in a], [r.label for r in b]
    if la != lb:
        notes.append(f"BS labels differ by convention: {model.convention.value} -> "
                     f"{_labels_text(la)} (nonsingular {nonsingular_count(a)}); "
                     f"{other.value} -> {_labels_text(lb)} (nonsingular {nonsingular_count(b)})")
    return notes


def _labels_text(labels) -> str:
    def one(label):
        return "(" + ",".join("*" if v is None else str(v) for v in label) + ")"
    return "[" + " ".join(one(x) for x in labels) + "]"


def _split_window(window, prefix):
    if window is None:
        return None
    if not isinstance(window, dict):
        raise NoTheoremError("product windows must be keyed by 'left.' / 'right.' names")
    out = {k[len(prefix):]: v for k, v in window.items() if k.startswith(prefix)}
    return out


def _combine_records(left, right) -> list:
    out = []
    for a, b in itertools.product(left, right):
        dim = a.fibre_dim + b.fibre_dim
        kinds = {a.regularity.kind, b.regularity.kind}
        if "focus_focus_singular" in kinds:
            reg = FOCUS_FOCUS
        elif "elliptic_singular" in kinds:
            reg = elliptic_singular(dim)
        else:
            reg = REGULAR
        out.append(BSFibreRecord(a.label + b.label, reg, dim))
    return out


def _chart_report(spec: ModelSpec, window, offsets, convention, seed, samples) -> QuantisationReport:
    model = make_model(spec, convention)
    kind = model.kind
    n = model.n

    if kind is Kind.PRODUCT:
        left_spec, right_spec = spec.left, spec.right
        if left_spec.kind not in (Kind.CYLINDER, Kind.DISK):
            raise NoTheoremError(f"product with a {left_spec.kind.value} left factor "
                                 "(only cylinder or disk factors split off)")
        left = _chart_report(left_spec, _split_window(window, "left."),
                             _split_window(offsets, "left."), convention, seed, samples)
        right = _chart_report(right_spec, _split_window(window, "right."),
                              _split_window(offsets, "right."), convention, seed, samples)
        rep = product_factorise(left, right)
        rep.h0_witness = h0_witness(model, window, seed, samples)
        return rep
    if kind is Kind.TORIC_POLYTOPE:
        return _toric_report(spec.polytope, seed, samples, convention)

    records = enumerate_bs_fibres(model, window, offsets)
    notes = _convention_notes(model, window, offsets)
    witness = h0_witness(model, window, seed, samples)
    b_s = len(records)
    if kind is Kind.CYLINDER:
        content = {1: FiniteDim(b_s)}
    elif kind is Kind.DISK:
        content = {1: FiniteDim(nonsingular_count(records))}
    elif kind is Kind.LINEAR or (kind is Kind.LIOUVILLE and spec.k == 0):
        content = {0: FunctionSpace(n, 1)}
    elif kind is Kind.LIOUVILLE:
        content = {spec.k: FunctionSpace(n - spec.k, b_s)}
    elif kind is Kind.ELLIPTIC:
        if spec.k == 0:
            # every direction is a regular angle: the compact Liouville case
            content = {n: FiniteDim(b_s)}
        else:
            content = {n: FiniteDim(nonsingular_count(records))}
    elif kind is Kind.FOCUS_FOCUS:
        reason = "focus-focus neighbourhood: H^1 and H^2 are open"
        content = {1: Unresolved(reason, (0.0, 0.0)), 2: Unresolved(reason, (0.0, 0.0))}
        notes = notes + ["focus_focus: H^0 = 0 from the dense nontrivial holonomy of the "
                         "rotation generator; higher degrees left unresolved"]
    else:  # pragma: no cover
        raise NoTheoremError(f"model kind {kind.value}")
    return _report(n, content, records, kind.value, notes, witness)


def _toric_chart(poly: Polytope, convention) -> Model:
    return make_model(ModelSpec.toric(poly), convention)


def _box_witness(model: Model, seed: int, samples: int):
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in model.bounds])
    hi = np.array([b[1] for b in model.bounds])
    P = rng.uniform(lo, hi, size=(samples, model.dim))
    w = None
    for j in model.circle_generators():
        cand = dense_holonomy_witness(model, j, P)
        if w is None or cand["nontrivial_fraction"] > w["nontrivial_fraction"]:
            w = cand
    w = dict(w)
    w["seed"] = seed
    w["dense"] = w["nontrivial_fraction"] >= DENSE_FRACTION
    return w


def _toric_report(poly: Polytope, seed, samples, convention) -> QuantisationReport:
    records = polytope_fibres(poly)
    n = poly.dimension
    content = {n: FiniteDim(nonsingular_count(records))}
    witness = _box_witness(_toric_chart(poly, convention), seed, samples)
    return _report(n, content, records, Kind.TORIC_POLYTOPE.value, [], witness)


def _almost_toric_report(base: AlmostToric4, seed, samples, convention) -> QuantisationReport:
    poly = base.polytope
    interior, boundary = lattice_points(poly)
    interior_set = set(interior)
    ff_lattice, notes = {}, []
    for mp in base.ff_points:
        pt = tuple(Fraction(v) for v in mp.point)
        slacks = poly.slacks(pt)
        if not all(s > 0 for s in slacks):
            raise DescriptorError(f"focus-focus mark {tuple(str(v) for v in pt)} "
                                  "is not in the polytope interior")
        if all(v.denominator == 1 for v in pt):
            key = tuple(int(v) for v in pt)
            ff_lattice[key] = ff_lattice.get(key, 0) + mp.multiplicity
        else:
            notes.append(f"focus-focus mark {tuple(str(v) for v in pt)} is not a lattice point: "
                         "no BS fibre there, its neighbourhood contributes 0")
    regular = [x for x in interior if x not in ff_lattice]
    records = [BSFibreRecord(x, REGULAR, 2) for x in regular]
    records += [BSFibreRecord(x, FOCUS_FOCUS, 2) for x in sorted(ff_lattice)]
    for x in boundary:
        rank = poly.face_dimension(x)
        records.append(BSFibreRecord(x, elliptic_singular(rank), rank))
    records.sort(key=lambda r: r.label)
    reason = "focus-focus BS fibre: local cohomology is open"
    ff_blocks = [Unresolved(reason, tuple(float(v) for v in x), m)
                 for x, m in sorted(ff_lattice.items())]
    missing = [x for x in ff_lattice if x not in interior_set]
    assert not missing
    content = {2: DirectSum(tuple([FiniteDim(len(regular))] + ff_blocks))}
    if ff_blocks:
        content[1] = DirectSum(tuple(ff_blocks))
    notes.append("almost_toric4: H^0 = 0 on every focus-focus neighbourhood; regular BS fibres "
                 "counted exactly; focus-focus contributions in degrees 1 and 2 unresolved")
    witness = _box_witness(_toric_chart(poly, convention), seed, samples)
    return _report(2, content, records, "almost_toric4", notes, witness)


def quantise(desc: FibrationDescriptor, window=None,
             convention: Convention = Convention.TRANSPORT_ORACLE, seed: int = 0,
             witness_samples: int = WITNESS_SAMPLES) -> QuantisationReport:
    """Quantisation report for ``desc``.

    ``window`` overrides the descriptor's own window. Raises
    :class:`NoTheoremError` outside the dispatch table.
    """
    desc.validate()
    window = desc.window if window is None else window
    offsets = desc.offsets
    if not desc.zero_fibre_bs and offsets is None:
        raise NoTheoremError("the zero fibre is not Bohr-Sommerfeld and no lattice offset "
                             "was supplied")
    base = desc.base
    convention = Convention(convention)
    if isinstance(base, ModelChart):
        rep = _chart_report(base.spec, window, offsets, convention, seed, witness_samples)
    elif isinstance(base, ToricPolytope):
        if not desc.compact:
            raise NoTheoremError("toric polytope descriptors must be compact")
        rep = _toric_report(base.polytope, seed, witness_samples, convention)
    elif isinstance(base, LagrangianBundle):
        k = base.fibre_rank_k
        if k == 0:
            raise NoTheoremError("lagrangian bundle with k = 0 (no circle action); only the "
                                 "linear chart is dispatched for k = 0")
        n = base.base_dim
        content = {k: FunctionSpace(n - k, base.bs_count)}
        notes = ["lagrangian_bundle: H^0 = 0 since the fibres carry a circle action"]
        rep = _report(n, content, [], "lagrangian_bundle", notes, None)
    elif isinstance(base, AlmostToric4):
        if not desc.compact:
            raise NoTheoremError("almost_toric4 descriptors must be compact")
        rep = _almost_toric_report(base, seed, witness_samples, convention)
    else:
        raise NoTheoremError(f"unknown base {type(base).__name__}")
    if rep.h0_witness is not None and rep.h0_witness["dense"] and not is_zero(rep.entry(0)):
        raise AssertionError("dense nontrivial holonomy but nonzero H^0")  # pragma: no cover
    return rep


def product_factorise(left: QuantisationReport, right: QuantisationReport) -> QuantisationReport:
    """Report of ``left x right`` for a cylinder or disk ``left`` factor.

    Degree ``d`` of the right factor moves to degree ``d + 1`` with
    multiplicity ``b_s`` (nonsingular ``b_s`` for the disk).
    """
    if left.source not in (Kind.CYLINDER.value, Kind.DISK.value):
        raise NoTheoremError(f"product_factorise needs a cylinder or disk left factor, "
                             f"got {left.source or 'unknown'}")
    e = normalise(left.entry(1))
    b_s = 0 if isinstance(e, Zero) else e.count
    n = 1 + right.dimension
    content = {d + 1: scale_entry(entry, b_s) for d, entry in right.per_degree.items()}
    records = _combine_records(left.bs_fibres, right.bs_fibres)
    notes = [f"left.{x}" for x in left.convention_notes] + \
        [f"right.{x}" for x in right.convention_notes]
    return _report(n, content, records, "product", notes, None)


# --------------------------------------------------------------------------
# Kunneth projection


def kunneth_form(model: Model, j: int, a: PolarisedForm, left_angle: float = 0.0,
                 cfg: NumericsConfig = DEFAULT_CONFIG) -> PolarisedForm:
    """``J_X(a)`` restricted to ``{x_left = 0}`` as a form on the right factor.

    Only coefficients whose multi-index avoids the left generator survive the
    restriction; the left angle is frozen at ``left_angle``.
    """
    if model.kind is not Kind.PRODUCT:
        raise NoTheoremError("kunneth_project needs a product model")
    L, R = product_factors(model)
    if L.kind is not Kind.CYLINDER or R.kind is not Kind.CYLINDER:
        raise NoTheoremError("kunneth_project is implemented for cylinder x cylinder")
    if j not in L.circle_generators():
        raise NoTheoremError("X must be a circle generator of the left factor")
    J = homotopy_form(j, a, cfg)
    coeffs = {}
    for idx, fn in J.coeffs.items():
        if any(i <= L.n for i in idx):
            continue

        def restricted(P, fn=fn):
            P = np.asarray(P, dtype=float)
            left = np.zeros(P.shape[:-1] + (L.dim,))
            left[..., 1] = left_angle
            return fn(np.concatenate([left, P], axis=-1))

        coeffs[tuple(i - L.n for i in idx)] = restricted
    return PolarisedForm(R, J.degree, coeffs, twisted=J.twisted)


def kunneth_project(model: Model, j: int, a: PolarisedForm, p,
                    cfg: NumericsConfig = DEFAULT_CONFIG) -> dict:
    """Value of the Kunneth image of ``a`` at the right-factor part of ``p``.

    The left momentum of ``p`` is replaced by 0 (the BS leaf of the left
    factor); its left angle is kept.
    """
    p = np.asarray(p, dtype=float)
    L, _ = product_factors(model)
    closed = F.max_abs(F.covariant_derivative(a, cfg), p)
    if closed > cfg.eq_tol:
        raise F.FormError(f"input is not closed: |d a| = {closed:.3e}")
    form = kunneth_form(model, j, a, float(p[1]), cfg)
    return form.evaluate(p[L.dim:])
