"""Catalogue of explicit local models of symplectic manifolds with a real
polarisation spanned by commuting vector fields.

Coordinates are ordered ``(x_1, ..., x_n, y_1, ..., y_n)`` and the symplectic
form is always ``sum_j dx_j ^ dy_j``. Product models concatenate the left
chart and the right chart. Each model carries a distinguished unitary gauge
whose connection potential ``Theta`` satisfies ``dTheta = omega``; sections and
forms elsewhere in the package are stored as coefficients in that gauge.

Generator indices are 1-based, matching the usual ``X_1, ..., X_n`` naming.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .numerics import TWO_PI

FIXED_POINT_NORM = 1e-12


class ModelError(ValueError):
    """Invalid model specification or unsupported model operation."""


class Kind(str, Enum):
    CYLINDER = "cylinder"
    DISK = "disk"
    LINEAR = "linear"
    LIOUVILLE = "liouville"
    ELLIPTIC = "elliptic"
    FOCUS_FOCUS = "focus_focus"
    PRODUCT = "product"
    TORIC_POLYTOPE = "toric_polytope"


class Convention(str, Enum):
    """Which loop parameter is used for rotation generators ``2(-y d/dx + x d/dy)``.

    ``TRANSPORT_ORACLE`` integrates over the minimal period pi of the orbit;
    ``PAPER_PRINTED`` uses the parameter period 2 pi, which reproduces the
    printed disk holonomy ``exp(2 pi i (x^2 + y^2))`` (the holonomy of the
    doubly traversed orbit).
    """

    TRANSPORT_ORACLE = "transport_oracle"
    PAPER_PRINTED = "paper_printed"


@dataclass(frozen=True)
class ModelSpec:
    kind: Kind
    n: int = 1
    k: int = 0
    left: Optional["ModelSpec"] = None
    right: Optional["ModelSpec"] = None
    polytope: object = None
    bounds: Optional[tuple] = None

    @classmethod
    def cylinder(cls, bounds=None):
        return cls(Kind.CYLINDER, 1, 1, bounds=bounds)

    @classmethod
    def disk(cls, bounds=None):
        return cls(Kind.DISK, 1, 1, bounds=bounds)

    @classmethod
    def linear(cls, n: int):
        return cls(Kind.LINEAR, n, 0)

    @classmethod
    def liouville(cls, n: int, k: int):
        return cls(Kind.LIOUVILLE, n, k)

    @classmethod
    def elliptic(cls, n: int, k: int):
        return cls(Kind.ELLIPTIC, n, k)

    @classmethod
    def focus_focus(cls):
        return cls(Kind.FOCUS_FOCUS, 2, 1)

    @classmethod
    def product(cls, left: "ModelSpec", right: "ModelSpec"):
        return cls(Kind.PRODUCT, left.total_n + right.total_n, 0, left=left, right=right)

    @classmethod
    def toric(cls, polytope):
        return cls(Kind.TORIC_POLYTOPE, polytope.dimension, polytope.dimension, polytope=polytope)

    @property
    def total_n(self) -> int:
        if self.kind is Kind.PRODUCT:
            return self.left.total_n + self.right.total_n
        return self.n

    def validate(self):
        kind = self.kind
        if kind in (Kind.LINEAR, Kind.LIOUVILLE, Kind.ELLIPTIC) and self.n < 1:
            raise ModelError(f"{kind.value}: n must be >= 1, got {self.n}")
        if kind in (Kind.LIOUVILLE, Kind.ELLIPTIC) and not 0 <= self.k <= self.n:
            raise ModelError(f"{kind.value}: need 0 <= k <= n, got n={self.n}, k={self.k}")
        if kind is Kind.PRODUCT:
            if self.left is None or self.right is None:
                raise ModelError("product: both factors are required")
            for side in (self.left, self.right):
                if side.kind is Kind.TORIC_POLYTOPE:
                    raise ModelError("product: a toric polytope factor has no chart")
                side.validate()
        if kind is Kind.TORIC_POLYTOPE and self.polytope is None:
            raise ModelError("toric_polytope: polytope is required")


# --------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Generator:
    """A polarisation generator acting on a block of chart coordinates.

    ``kind`` is one of ``translation`` (non-compact), ``angle`` (translation
    of a 2 pi periodic coordinate), ``rotation`` (``-2y d/dx + 2x d/dy`` on a
    coordinate pair), ``focus_rotation`` and ``hyperbolic`` (the two
    focus-focus generators on ``(x1, x2, y1, y2)``).
    """

    kind: str
    coords: tuple

    @property
    def is_circle(self) -> bool:
        return self.kind in ("angle", "rotation", "focus_rotation")

    def field(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        V = np.zeros_like(P)
        c = self.coords
        if self.kind in ("translation", "angle"):
            V[..., c[0]] = 1.0
        elif self.kind == "rotation":
            i, j = c
            V[..., i] = -2.0 * P[..., j]
            V[..., j] = 2.0 * P[..., i]
        elif self.kind == "focus_rotation":
            x1, x2, y1, y2 = c
            V[..., x1] = P[..., x2]
            V[..., x2] = -P[..., x1]
            V[..., y1] = P[..., y2]
            V[..., y2] = -P[..., y1]
        elif self.kind == "hyperbolic":
            x1, x2, y1, y2 = c
            V[..., x1] = -P[..., x1]
            V[..., x2] = -P[..., x2]
            V[..., y1] = P[..., y1]
            V[..., y2] = P[..., y2]
        return V

    def flow(self, P: np.ndarray, t, wrap: bool = True) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(P.shape[:-1], t.shape)
        Q = np.array(np.broadcast_to(P, shape + P.shape[-1:]))
        t = np.broadcast_to(t, shape)
        c = self.coords
        if self.kind == "translation" or (self.kind == "angle" and not wrap):
            Q[..., c[0]] = Q[..., c[0]] + t
        elif self.kind == "angle":
            Q[..., c[0]] = np.mod(Q[..., c[0]] + t, TWO_PI)
        elif self.kind == "rotation":
            i, j = c
            cs, sn = np.cos(2.0 * t), np.sin(2.0 * t)
            xi, xj = Q[..., i].copy(), Q[..., j].copy()
            Q[..., i] = xi * cs - xj * sn
            Q[..., j] = xi * sn + xj * cs
        elif self.kind == "focus_rotation":
            x1, x2, y1, y2 = c
            cs, sn = np.cos(t), np.sin(t)
            a1, a2, b1, b2 = (Q[..., m].copy() for m in c)
            Q[..., x1] = a1 * cs + a2 * sn
            Q[..., x2] = a2 * cs - a1 * sn
            Q[..., y1] = b1 * cs + b2 * sn
            Q[..., y2] = b2 * cs - b1 * sn
        elif self.kind == "hyperbolic":
            x1, x2, y1, y2 = c
            shrink, grow = np.exp(-t), np.exp(t)
            Q[..., x1] = Q[..., x1] * shrink
            Q[..., x2] = Q[..., x2] * shrink
            Q[..., y1] = Q[..., y1] * grow
            Q[..., y2] = Q[..., y2] * grow
        return Q

    def shifted(self, offset: int) -> "Generator":
        return Generator(self.kind, tuple(c + offset for c in self.coords))

    def base_period(self, convention: Convention) -> float:
        if self.kind == "rotation" and convention is Convention.TRANSPORT_ORACLE:
            return np.pi
        if self.is_circle:
            return TWO_PI
        raise ModelError(f"{self.kind} generator does not generate a circle action")


@dataclass(frozen=True)
class Period:
    value: float
    fixed_point: bool = False


@dataclass(frozen=True)
class MomentComponent:
    """One component of the moment map; ``generator`` is set for the components
    whose hamiltonian flow is periodic, with ``scale = period / 2 pi`` so that
    the holonomy is ``exp(2 pi i * scale * value)``."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    generator: Optional[int] = None
    scale: float = 1.0
    elliptic: bool = False
    focus: bool = False

    @property
    def quantised(self) -> bool:
        return self.generator is not None


# --------------------------------------------------------------------------
# potentials: ("xdy", i, j) is x_i dy_j, ("sym", i, j) is (x_i dy_j - y_j dx_i)/2


def _potential(terms, P):
    P = np.asarray(P, dtype=float)
    T = np.zeros_like(P)
    for kind, i, j in terms:
        if kind == "xdy":
            T[..., j] += P[..., i]
        else:
            T[..., j] += 0.5 * P[..., i]
            T[..., i] -= 0.5 * P[..., j]
    return T


def _omega(n_half):
    dim = 2 * n_half
    W = np.zeros((dim, dim))
    for j in range(n_half):
        W[j, n_half + j] = 1.0
        W[n_half + j, j] = -1.0
    return W


@dataclass(frozen=True, eq=False)
class Model:
    """Immutable handle to a local model chart."""

    spec: ModelSpec
    dim: int
    coord_names: tuple
    periodic: tuple
    bounds: tuple
    generators: tuple
    potential_terms: tuple
    omega: np.ndarray
    moments: tuple
    unitary_phase_label: str
    convention: Convention = Convention.TRANSPORT_ORACLE
    polytope: object = None
    _blocks: tuple = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def kind(self) -> Kind:
        return self.spec.kind

    @property
    def moment_names(self) -> tuple:
        return tuple(m.name for m in self.moments)

    def generator(self, j: int) -> Generator:
        if not 1 <= j <= self.n:
            raise ModelError(f"generator index {j} out of range 1..{self.n}")
        return self.generators[j - 1]

    def circle_generators(self) -> list:
        return [j for j, g in enumerate(self.generators, start=1) if g.is_circle]

    def polarisation_generator(self, j: int, P) -> np.ndarray:
        return self.generator(j).field(P)

    def flow(self, j: int, P, t, wrap: bool = True) -> np.ndarray:
        """Closed-form flow of ``X_j``; ``wrap=False`` leaves angle
        coordinates unreduced (used for differencing along orbits)."""
        return self.generator(j).flow(P, t, wrap)

    def potential(self, P) -> np.ndarray:
        """Covector components of ``Theta`` at ``P``."""
        return _potential(self.potential_terms, P)

    def theta(self, j: int, P) -> np.ndarray:
        """``Theta(X_j)``, the hamiltonian of ``X_j`` in the distinguished gauge."""
        P = np.asarray(P, dtype=float)
        return np.sum(self.potential(P) * self.generator(j).field(P), axis=-1)

    def period(self, j: int, P) -> Period:
        """Period of the ``X_j`` orbit through a single point ``P``."""
        g = self.generator(j)
        base = g.base_period(self.convention)
        if np.linalg.norm(g.field(P)) < FIXED_POINT_NORM:
            return Period(0.0, fixed_point=True)
        return Period(base)

    def periods(self, j: int, P) -> np.ndarray:
        """Vectorised period: zero at fixed points."""
        g = self.generator(j)
        base = g.base_period(self.convention)
        norm = np.linalg.norm(g.field(P), axis=-1)
        return np.where(norm < FIXED_POINT_NORM, 0.0, base)

    def normalize(self, P) -> np.ndarray:
        P = np.array(P, dtype=float)
        for c, per in enumerate(self.periodic):
            if per:
                P[..., c] = np.mod(P[..., c], TWO_PI)
        return P

    def moment_map(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return np.stack([m.value(P) for m in self.moments], axis=-1)

    def singular_distance(self, P) -> np.ndarray:
        """Distance to the locus where the generator frame degenerates."""
        P = np.asarray(P, dtype=float)
        d = np.full(P.shape[:-1], np.inf)
        for g in self.generators:
            if g.kind == "rotation":
                d = np.minimum(d, np.hypot(P[..., g.coords[0]], P[..., g.coords[1]]))
            elif g.kind in ("focus_rotation", "hyperbolic"):
                d = np.minimum(d, np.linalg.norm(P[..., list(g.coords)], axis=-1))
        return d

    def sample(self, rng: np.random.Generator, m: int, box: float = 2.0,
               exclude: float = 1e-3) -> np.ndarray:
        """Uniform points in ``[-box, box]`` (angles in ``[0, 2 pi)``) away
        from singular points of the polarisation."""
        out = np.empty((0, self.dim))
        while out.shape[0] < m:
            P = rng.uniform(-box, box, size=(2 * m, self.dim))
            for c, per in enumerate(self.periodic):
                if per:
                    P[:, c] = rng.uniform(0.0, TWO_PI, size=2 * m)
            P = P[self.singular_distance(P) > exclude]
            out = np.concatenate([out, P])
        return out[:m]

    def flat_section_closed_form(self):
        """Closed-form flat sections for the cylinder and linear models.

        Returns a function taking the caller's amplitude ``h`` (a function of
        the ``x`` coordinates, given the array ``x`` of shape ``(..., n)``) and
        returning the gauge coefficient ``h(x) exp(i sum x_j y_j)``. Other
        models return ``None``.
        """
        if self.kind not in (Kind.CYLINDER, Kind.LINEAR):
            return None
        n = self.n

        def build(h):
            def coeff(P):
                P = np.asarray(P, dtype=float)
                x, y = P[..., :n], P[..., n:]
                return h(x) * np.exp(1j * np.sum(x * y, axis=-1))
            return coeff

        return build

    def with_convention(self, convention: Convention) -> "Model":
        return make_model(self.spec, convention)


# --------------------------------------------------------------------------
# construction


def _coords(n):
    if n == 1:
        return ("x", "y")
    return tuple(f"x{j}" for j in range(1, n + 1)) + tuple(f"y{j}" for j in range(1, n + 1))


def _default_bounds(periodic):
    return tuple((0.0, TWO_PI) if p else (-np.inf, np.inf) for p in periodic)


def _comp(index):
    return lambda P: np.asarray(P)[..., index]


def _radius2(i, j):
    return lambda P: np.asarray(P)[..., i] ** 2 + np.asarray(P)[..., j] ** 2


def _scale(g: Generator, convention: Convention) -> float:
    return g.base_period(convention) / TWO_PI


def make_model(spec: ModelSpec, convention: Convention = Convention.TRANSPORT_ORACLE) -> Model:
    """Build the chart handle for ``spec``.

    Raises :class:`ModelError` for invalid ``(n, k)`` or for products with a
    polytope factor.
    """
    spec.validate()
    convention = Convention(convention)
    kind = spec.kind
    if kind is Kind.PRODUCT:
        return _make_product(spec, convention)

    if kind in (Kind.CYLINDER, Kind.DISK):
        n = 1
    elif kind is Kind.FOCUS_FOCUS:
        n = 2
    else:
        n = spec.n
    dim = 2 * n
    periodic = [False] * dim
    gens, terms, moments = [], [], []

    if kind is Kind.CYLINDER:
        periodic[1] = True
        gens.append(Generator("angle", (1,)))
        terms.append(("xdy", 0, 1))
        moments.append(MomentComponent("x", _comp(0), 1, 1.0))
        label = "exp(i x)"
    elif kind is Kind.DISK:
        gens.append(Generator("rotation", (0, 1)))
        terms.append(("sym", 0, 1))
        moments.append(MomentComponent("F", _radius2(0, 1), 1, _scale(gens[0], convention),
                                       elliptic=True))
        label = "exp(i (x^2 + y^2))"
    elif kind in (Kind.LINEAR, Kind.LIOUVILLE, Kind.TORIC_POLYTOPE):
        k = 0 if kind is Kind.LINEAR else spec.k
        for j in range(n):
            circle = j < k
            periodic[n + j] = circle
            gens.append(Generator("angle" if circle else "translation", (n + j,)))
            terms.append(("xdy", j, n + j))
            moments.append(MomentComponent(f"x{j + 1}", _comp(j), j + 1 if circle else None, 1.0))
        label = "exp(i sum_j x_j)"
    elif kind is Kind.ELLIPTIC:
        k = spec.k
        for j in range(n):
            if j < k:
                g = Generator("rotation", (j, n + j))
                terms.append(("sym", j, n + j))
                moments.append(MomentComponent(f"F{j + 1}", _radius2(j, n + j), j + 1,
                                               _scale(g, convention), elliptic=True))
            else:
                periodic[n + j] = True
                g = Generator("angle", (n + j,))
                terms.append(("xdy", j, n + j))
                moments.append(MomentComponent(f"x{j + 1}", _comp(j), j + 1, 1.0))
            gens.append(g)
        label = "exp(i [sum_{j<=k} (x_j^2 + y_j^2) + sum_{j>k} x_j])"
    elif kind is Kind.FOCUS_FOCUS:
        gens.append(Generator("hyperbolic", (0, 1, 2, 3)))
        gens.append(Generator("focus_rotation", (0, 1, 2, 3)))
        terms.extend([("sym", 0, 2), ("sym", 1, 3)])
        moments.append(MomentComponent(
            "mu", lambda P: P[..., 0] * P[..., 2] + P[..., 1] * P[..., 3], focus=True))
        moments.append(MomentComponent(
            "lambda", lambda P: P[..., 0] * P[..., 3] - P[..., 1] * P[..., 2], 2, 1.0,
            focus=True))
        label = "exp(i (x1 y2 - x2 y1))"
    else:  # pragma: no cover
        raise ModelError(f"unknown model kind {kind}")

    bounds = spec.bounds if spec.bounds is not None else _default_bounds(periodic)
    if kind is Kind.TORIC_POLYTOPE:
        lo, hi = spec.polytope.bounding_box()
        bounds = tuple((float(a), float(b)) for a, b in zip(lo, hi)) + tuple(bounds[n:])
    if len(bounds) != dim:
        raise ModelError(f"bounds must have {dim} intervals, got {len(bounds)}")
    return Model(spec=spec, dim=dim, coord_names=_coords(n), periodic=tuple(periodic),
                 bounds=tuple(tuple(b) for b in bounds), generators=tuple(gens),
                 potential_terms=tuple(terms), omega=_omega(n), moments=tuple(moments),
                 unitary_phase_label=label, convention=convention, polytope=spec.polytope)


def _make_product(spec: ModelSpec, convention: Convention) -> Model:
    L = make_model(spec.left, convention)
    R = make_model(spec.right, convention)
    off = L.dim
    gens = L.generators + tuple(g.shifted(off) for g in R.generators)
    terms = L.potential_terms + tuple((kd, i + off, j + off) for kd, i, j in R.potential_terms)
    dim = L.dim + R.dim
    W = np.zeros((dim, dim))
    W[:off, :off] = L.omega
    W[off:, off:] = R.omega

    def lifted(m: MomentComponent, side: str, shift_coords: int, shift_gen: int):
        fn = m.value
        value = (lambda P: fn(np.asarray(P)[..., :off])) if side == "left" else \
            (lambda P: fn(np.asarray(P)[..., off:]))
        gen = None if m.generator is None else m.generator + shift_gen
        return MomentComponent(f"{side}.{m.name}", value, gen, m.scale, m.elliptic, m.focus)

    moments = tuple(lifted(m, "left", 0, 0) for m in L.moments) + \
        tuple(lifted(m, "right", off, L.n) for m in R.moments)
    names = tuple(f"left.{c}" for c in L.coord_names) + tuple(f"right.{c}" for c in R.coord_names)
    bounds = spec.bounds if spec.bounds is not None else L.bounds + R.bounds
    return Model(spec=spec, dim=dim, coord_names=names, periodic=L.periodic + R.periodic,
                 bounds=tuple(bounds), generators=gens, potential_terms=terms, omega=W,
                 moments=moments,
                 unitary_phase_label=f"{L.unitary_phase_label} * {R.unitary_phase_label}",
                 convention=convention, _blocks=(L, R))


def product_factors(model: Model) -> tuple:
    """The ``(left, right)`` factor handles of a product model."""
    if model.kind is not Kind.PRODUCT:
        raise ModelError("not a product model")
    return model._blocks
