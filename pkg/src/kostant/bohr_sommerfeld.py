"""Bohr-Sommerfeld points, lattice enumeration of BS fibres and polytopes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .circle_action import HOLONOMY_TRIVIAL, holonomy_values
from .models import Convention, Kind, Model, ModelError

MAX_LATTICE_CANDIDATES = 10 ** 7
MAX_FIBRES = 10 ** 6


class WindowError(ValueError):
    """Window missing a bound in a quantised direction, or malformed."""


class PolytopeError(ValueError):
    """Unbounded, empty or malformed polytope."""


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Regularity:
    kind: str  # "regular", "elliptic_singular" or "focus_focus_singular"
    rank: Optional[int] = None

    def __str__(self):
        if self.kind == "regular":
            return "Regular"
        if self.kind == "elliptic_singular":
            return f"EllipticSingular({self.rank})"
        return "FocusFocusSingular"

    @classmethod
    def parse(cls, text: str) -> "Regularity":
        if text == "Regular":
            return REGULAR
        if text == "FocusFocusSingular":
            return FOCUS_FOCUS
        if text.startswith("EllipticSingular(") and text.endswith(")"):
            return cls("elliptic_singular", int(text[len("EllipticSingular("):-1]))
        raise ValueError(f"unknown regularity {text!r}")


REGULAR = Regularity("regular")
FOCUS_FOCUS = Regularity("focus_focus_singular")


def elliptic_singular(rank: int) -> Regularity:
    return Regularity("elliptic_singular", rank)


@dataclass(frozen=True)
class BSFibreRecord:
    """``label`` holds one entry per moment component; ``None`` marks a
    continuum direction (a fibre family rather than a single fibre)."""

    label: tuple
    regularity: Regularity
    fibre_dim: int

    @property
    def is_regular(self) -> bool:
        return self.regularity.kind == "regular"


# --------------------------------------------------------------------------
# polytopes


def _fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    value = float(value)
    if not math.isfinite(value):
        raise PolytopeError("halfspace offsets must be finite")
    return Fraction(repr(value))


@dataclass(frozen=True)
class Polytope:
    """Intersection of halfspaces ``normal . x + offset >= 0``.

    Normals are integer vectors; offsets are kept as exact fractions so that
    the interior/boundary split of lattice points is decided in integer
    arithmetic.
    """

    halfspaces: tuple  # of (tuple[int, ...], Fraction)
    dimension: int

    @classmethod
    def from_rows(cls, rows) -> "Polytope":
        """Rows ``[a_1, ..., a_d, b]`` meaning ``a . x + b >= 0``."""
        rows = list(rows)
        if not rows:
            raise PolytopeError("polytope needs at least one halfspace")
        dim = len(rows[0]) - 1
        if dim < 1:
            raise PolytopeError("halfspace rows need a normal and an offset")
        hs = []
        for r, row in enumerate(rows):
            if len(row) != dim + 1:
                raise PolytopeError(f"halfspace {r}: expected {dim + 1} entries, got {len(row)}")
            normal = []
            for c, a in enumerate(row[:-1]):
                fa = _fraction(a)
                if fa.denominator != 1:
                    raise PolytopeError(f"halfspace {r}: normal entry {c} is not an integer")
                normal.append(int(fa))
            if not any(normal):
                raise PolytopeError(f"halfspace {r}: zero normal")
            hs.append((tuple(normal), _fraction(row[-1])))
        return cls(tuple(hs), dim)

    @classmethod
    def box(cls, lower, upper) -> "Polytope":
        d = len(lower)
        rows = []
        for i in range(d):
            e = [0] * d
            e[i] = 1
            rows.append(e + [-_fraction(lower[i])])
            e = [0] * d
            e[i] = -1
            rows.append(e + [_fraction(upper[i])])
        return cls.from_rows(rows)

    def rows(self) -> list:
        return [list(a) + [b] for a, b in self.halfspaces]

    def _scaled(self):
        """Integer matrix ``A`` and vector ``B`` with ``D (a.x + b) = A x + B``
        per row, ``D`` the row's offset denominator."""
        A = np.array([[a * b.denominator for a in normal] for normal, b in self.halfspaces],
                     dtype=object)
        B = np.array([b.numerator for _, b in self.halfspaces], dtype=object)
        return A, B

    def bounding_box(self) -> tuple:
        """Per-coordinate ``(lower, upper)`` extent by linear programming."""
        A = np.array([a for a, _ in self.halfspaces], dtype=float)
        b = np.array([float(o) for _, o in self.halfspaces])
        lo, hi = [], []
        for i in range(self.dimension):
            bounds = []
            for sign in (1.0, -1.0):
                c = np.zeros(self.dimension)
                c[i] = sign
                res = linprog(c, A_ub=-A, b_ub=b, bounds=[(None, None)] * self.dimension,
                              method="highs")
                if res.status == 3:
                    raise PolytopeError(f"polytope is unbounded in coordinate {i}")
                if res.status == 2:
                    raise PolytopeError("polytope is empty")
                if res.status != 0:
                    raise PolytopeError(f"linear program failed: {res.message}")
                bounds.append(sign * res.fun)
            lo.append(bounds[0])
            hi.append(bounds[1])
        return tuple(lo), tuple(hi)

    def slacks(self, x) -> list:
        """Exact ``a . x + b`` for an integer (or rational) point."""
        return [sum(Fraction(ai) * Fraction(xi) for ai, xi in zip(a, x)) + b
                for a, b in self.halfspaces]

    def contains(self, x) -> bool:
        return all(s >= 0 for s in self.slacks(x))

    def face_dimension(self, x) -> int:
        """Dimension of the smallest face containing the point ``x``."""
        active = [a for (a, _), s in zip(self.halfspaces, self.slacks(x)) if s == 0]
        if not active:
            return self.dimension
        return self.dimension - int(np.linalg.matrix_rank(np.array(active, dtype=float)))


def lattice_points(poly: Polytope) -> tuple:
    """Integer points of ``poly`` split into ``(interior, boundary)``.

    Membership is decided exactly: each halfspace is scaled to integers and
    the candidates from the integer bounding box are tested with int64
    arithmetic (object arithmetic if the data could overflow).
    """
    lo, hi = poly.bounding_box()
    ranges = [range(math.floor(a + 1e-9), math.ceil(b - 1e-9) + 1) for a, b in zip(lo, hi)]
    # widen by one lattice step so that LP round-off cannot drop a point
    ranges = [range(r.start - 1, r.stop + 1) for r in ranges]
    count = math.prod(len(r) for r in ranges)
    if count > MAX_LATTICE_CANDIDATES:
        raise PolytopeError(f"{count} lattice candidates exceed the limit {MAX_LATTICE_CANDIDATES}")
    grids = np.meshgrid(*[np.arange(r.start, r.stop) for r in ranges], indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=-1)
    A, B = poly._scaled()
    big = max(abs(int(v)) for v in list(A.ravel()) + list(B)) if A.size else 0
    span = max(abs(r.start) + abs(r.stop) for r in ranges)
    if big * (span + 1) * (poly.dimension + 1) < 2 ** 62:
        S = X.astype(np.int64) @ A.astype(np.int64).T + B.astype(np.int64)
    else:
        S = X.astype(object) @ A.T + B
    inside = np.all(S >= 0, axis=1)
    strict = np.all(S > 0, axis=1)
    interior = [tuple(int(v) for v in x) for x in X[inside & strict]]
    boundary = [tuple(int(v) for v in x) for x in X[inside & ~strict]]
    return interior, boundary


# --------------------------------------------------------------------------
# Bohr-Sommerfeld points


def is_bs_point(model: Model, p, threshold: float = HOLONOMY_TRIVIAL) -> bool:
    """True iff every circle generator has trivial holonomy at ``p``.

    Non-compact generator directions impose no condition.
    """
    p = np.asarray(p, dtype=float)
    for j in model.circle_generators():
        if abs(complex(holonomy_values(model, j, p)) - 1.0) > threshold:
            return False
    return True


def normalise_window(model: Model, window) -> dict:
    """Window as ``{moment name: (lo, hi)}`` with ``None`` for a missing side.

    Accepts a mapping keyed by moment names or a sequence aligned with
    ``model.moment_names``. Every interval is open.
    """
    names = model.moment_names
    if window is None:
        window = {}
    if not isinstance(window, dict):
        window = list(window)
        if len(window) != len(names):
            raise WindowError(f"window needs {len(names)} intervals ({', '.join(names)})")
        window = dict(zip(names, window))
    out = {}
    for key, iv in window.items():
        if key not in names:
            raise WindowError(f"window key {key!r} is not a moment component "
                              f"(expected one of {', '.join(names)})")
        if iv is None:
            out[key] = (None, None)
            continue
        if len(iv) != 2:
            raise WindowError(f"window[{key!r}] must be a pair [lo, hi]")
        lo, hi = (None if v is None else float(v) for v in iv)
        if lo is not None and hi is not None and not lo < hi:
            raise WindowError(f"window[{key!r}]: need lo < hi, got ({lo}, {hi})")
        out[key] = (lo, hi)
    for key in names:
        out.setdefault(key, (None, None))
    return out


def _lattice_range(comp, lo, hi, offset: float):
    """Integers ``m`` with ``(m - offset) / scale`` inside the open window."""
    s = comp.scale
    if hi is None or (lo is None and not comp.elliptic):
        raise WindowError(f"window is unbounded in the quantised direction {comp.name!r}")
    m_max = math.ceil(hi * s + offset) - 1
    m_min = -math.inf if lo is None else math.floor(lo * s + offset) + 1
    if comp.elliptic:
        # F >= 0 on the chart, and F = 0 (the fixed point) is attained
        m_min = max(m_min, math.ceil(offset))
    m_min = int(m_min)
    return range(m_min, m_max + 1)


def _label_value(m: int, comp, offset: float):
    v = (m - offset) / comp.scale
    r = round(v)
    return int(r) if abs(v - r) < 1e-12 else v


def _contains(iv, value) -> bool:
    lo, hi = iv
    return (lo is None or lo < value) and (hi is None or value < hi)


def enumerate_bs_fibres(model: Model, window=None, offsets=None) -> list:
    """One record per lattice value of the quantised moment components.

    ``offsets`` maps moment names to a lattice offset ``c`` so that the BS
    condition reads ``scale * value + c`` in the integers (default 0, i.e. the
    zero fibre is BS). Continuum components appear as ``None`` in the label.
    Toric models enumerate the lattice points of their polytope instead.
    """
    if model.kind is Kind.TORIC_POLYTOPE:
        return polytope_fibres(model.polytope)
    win = normalise_window(model, window)
    offsets = dict(offsets or {})
    for key in offsets:
        if key not in model.moment_names:
            raise WindowError(f"offset key {key!r} is not a moment component")
    comps = list(model.moments)
    ranges = []
    for c in comps:
        if c.quantised:
            lo, hi = win[c.name]
            ranges.append(_lattice_range(c, lo, hi, float(offsets.get(c.name, 0.0))))
        else:
            ranges.append([None])
    total = math.prod(len(r) for r in ranges)
    if total > MAX_FIBRES:
        raise WindowError(f"{total} lattice values exceed the enumeration limit {MAX_FIBRES}")
    n = model.n
    records = []
    for ms in itertools.product(*ranges):
        label = tuple(None if m is None else _label_value(m, c, float(offsets.get(c.name, 0.0)))
                      for m, c in zip(ms, comps))
        elliptic_zeros = sum(1 for v, c in zip(label, comps) if c.elliptic and v == 0)
        focus_names = [c.name for c in comps if c.focus]
        focus_critical = False
        if focus_names:
            quantised_focus = [v for v, c in zip(label, comps) if c.focus and c.quantised]
            free_focus = [c.name for c in comps if c.focus and not c.quantised]
            focus_critical = all(v == 0 for v in quantised_focus) and \
                all(_contains(win[name], 0.0) for name in free_focus)
        if focus_critical:
            records.append(BSFibreRecord(label, FOCUS_FOCUS, 2))
        elif elliptic_zeros:
            rank = n - elliptic_zeros
            records.append(BSFibreRecord(label, elliptic_singular(rank), rank))
        else:
            records.append(BSFibreRecord(label, REGULAR, n))
    return records


def polytope_fibres(poly: Polytope) -> list:
    """BS fibres of a toric manifold: interior lattice points are regular,
    boundary points elliptic-singular with rank equal to their face dimension."""
    interior, boundary = lattice_points(poly)
    records = [BSFibreRecord(x, REGULAR, poly.dimension) for x in interior]
    for x in boundary:
        rank = poly.face_dimension(x)
        records.append(BSFibreRecord(x, elliptic_singular(rank), rank))
    return sorted(records, key=lambda r: r.label)


def nonsingular_count(records) -> int:
    return sum(1 for r in records if r.is_regular)


def fibre_point(model: Model, record: BSFibreRecord, rng=None) -> np.ndarray:
    """A chart point on the fibre with the given label.

    Continuum components are filled with sampled values; the angle/phase of
    each rotation block is random.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if model.kind not in (Kind.CYLINDER, Kind.DISK, Kind.LINEAR, Kind.LIOUVILLE,
                          Kind.ELLIPTIC, Kind.TORIC_POLYTOPE):
        raise ModelError(f"fibre_point is not implemented for {model.kind.value}")
    n = model.n
    P = np.zeros(2 * n)
    for j, (v, g) in enumerate(zip(record.label, model.generators)):
        value = rng.uniform(-1.0, 1.0) if v is None else float(v)
        if g.kind == "rotation":
            r = math.sqrt(max(value, 0.0))
            phi = rng.uniform(0.0, 2 * math.pi)
            i, k = g.coords
            P[i], P[k] = r * math.cos(phi), r * math.sin(phi)
        else:
            P[j] = value
            P[n + j] = rng.uniform(0.0, 2 * math.pi)
    return P


def convention_comparison(model: Model, window=None, offsets=None) -> dict:
    """BS fibres under both rotation conventions, keyed by convention value."""
    out = {}
    for conv in Convention:
        m = model.with_convention(conv)
        out[conv.value] = enumerate_bs_fibres(m, window, offsets)
    return out
