"""Line-bundle-valued polarised forms and the Kostant-complex operators.

A degree-k form is stored in the co-basis ``e^1, ..., e^n`` dual to the
polarisation generators ``X_1, ..., X_n`` of a model, as a map from increasing
1-based multi-indices to complex coefficient functions. Line-bundle-valued
("twisted") forms are understood as ``alpha (x) s`` with ``s`` the model's
distinguished unitary section, so the connection acts by
``nabla s = -i Theta|_P (x) s``.

Because the catalogued generators commute, the co-basis is closed and
invariant under every generator flow; the operators below rely on that.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .models import Model
from .numerics import NumericsConfig, central_difference

Coefficient = Callable[[np.ndarray], np.ndarray]

DEFAULT_CONFIG = NumericsConfig()


class FormError(ValueError):
    """Degree or model mismatch between forms."""


def _sort_sign(idx):
    """Sign of the permutation sorting ``idx`` and the sorted tuple, or
    ``(0, None)`` when an index repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, None
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


def _scaled(fn, c):
    return lambda P: c * fn(P)


def _summed(fns):
    if len(fns) == 1:
        return fns[0]
    return lambda P: sum(f(P) for f in fns)


class PolarisedForm:
    """A polarised form of fixed degree on a model.

    ``coeffs`` maps multi-indices (any order; they are canonicalised with the
    alternating sign) to coefficient functions of points ``P`` of shape
    ``(..., dim)``. ``partials`` optionally supplies analytic generator
    derivatives ``{(I, j): X_j(coeff_I)}``; missing entries fall back to
    finite differences along the generator flow.
    """

    def __init__(self, model: Model, degree: int, coeffs=None, twisted: bool = True,
                 partials: Optional[dict] = None):
        if degree < 0:
            raise FormError("negative degree: S^-1 is empty")
        self.model = model
        self.degree = degree
        self.twisted = twisted
        grouped: dict = {}
        for idx, fn in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise FormError(f"multi-index {idx} does not have length {degree}")
            if any(not 1 <= i <= model.n for i in idx):
                raise FormError(f"multi-index {idx} out of range 1..{model.n}")
            sign, key = _sort_sign(idx)
            if sign == 0:
                continue
            grouped.setdefault(key, []).append(fn if sign > 0 else _scaled(fn, -1.0))
        self.coeffs = {} if degree > model.n else {k: _summed(v) for k, v in sorted(grouped.items())}
        self.partials = dict(partials or {})

    @property
    def trivially_zero(self) -> bool:
        """True for forms above the rank of the polarisation (or with no terms)."""
        return self.degree > self.model.n or not self.coeffs

    def basis(self) -> list:
        if self.degree > self.model.n:
            return []
        return list(combinations(range(1, self.model.n + 1), self.degree))

    def evaluate(self, P) -> dict:
        P = np.asarray(P, dtype=float)
        zero = np.zeros(P.shape[:-1], dtype=complex)
        return {I: (np.asarray(self.coeffs[I](P), dtype=complex) + zero) if I in self.coeffs
                else zero.copy() for I in self.basis()}

    __call__ = evaluate

    def values(self, P) -> np.ndarray:
        """Coefficients stacked along a trailing axis in canonical order."""
        ev = self.evaluate(P)
        if not ev:
            return np.zeros(np.asarray(P).shape[:-1] + (0,), dtype=complex)
        return np.stack([ev[I] for I in self.basis()], axis=-1)

    def derivative(self, I, j: int, cfg: NumericsConfig = DEFAULT_CONFIG) -> Coefficient:
        """``X_j`` applied to the coefficient of ``I``."""
        if (I, j) in self.partials:
            return self.partials[(I, j)]
        fn = self.coeffs[I]
        model = self.model
        h = cfg.fd_step

        def d(P):
            P = np.asarray(P, dtype=float)
            return central_difference(lambda s: fn(model.flow(j, P, s, wrap=False)), h)

        return d

    def map_coeffs(self, fn) -> "PolarisedForm":
        return PolarisedForm(self.model, self.degree,
                             {I: fn(c) for I, c in self.coeffs.items()}, self.twisted)

    def __add__(self, other: "PolarisedForm") -> "PolarisedForm":
        _check_same(self, other)
        if self.degree != other.degree or self.twisted != other.twisted:
            raise FormError("cannot add forms of different degree or bundle type")
        terms = {}
        for I in set(self.coeffs) | set(other.coeffs):
            fns = [f.coeffs[I] for f in (self, other) if I in f.coeffs]
            terms[I] = _summed(fns)
        return PolarisedForm(self.model, self.degree, terms, self.twisted)

    def __neg__(self):
        return self.map_coeffs(lambda c: _scaled(c, -1.0))

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c: complex):
        return self.map_coeffs(lambda f: _scaled(f, c))

    def __repr__(self):
        kind = "S" if self.twisted else "Omega"
        return f"<{kind}^{self.degree} form on {self.model.kind.value}: {sorted(self.coeffs)}>"


def _check_same(a: PolarisedForm, b: PolarisedForm):
    if a.model is not b.model:
        raise FormError("forms live on different models")


# --------------------------------------------------------------------------
# constructors


def section(model: Model, coeff: Coefficient, partials=None) -> PolarisedForm:
    """Section ``coeff * s`` as a degree-0 twisted form."""
    parts = {((), j): f for j, f in (partials or {}).items()}
    return PolarisedForm(model, 0, {(): coeff}, twisted=True, partials=parts)


def function(model: Model, fn: Coefficient) -> PolarisedForm:
    """Plain (untwisted) function as a degree-0 polarised form."""
    return PolarisedForm(model, 0, {(): fn}, twisted=False)


def basis_form(model: Model, idx, coeff: Coefficient = None, twisted: bool = True) -> PolarisedForm:
    coeff = coeff if coeff is not None else (lambda P: np.ones(np.asarray(P).shape[:-1]))
    return PolarisedForm(model, len(idx), {tuple(idx): coeff}, twisted)


def zero_form(model: Model, degree: int, twisted: bool = True) -> PolarisedForm:
    return PolarisedForm(model, degree, {}, twisted)


def from_chart_one_form(model: Model, chart_coeffs, twisted: bool = True) -> PolarisedForm:
    """Restrict a chart 1-form ``sum_c a_c dz_c`` to the polarisation.

    ``chart_coeffs(P)`` returns the covector components with shape
    ``(..., dim)``; the co-basis coefficient of ``e^j`` is ``a(X_j)``.
    """
    def restricted(j):
        g = model.generator(j)
        return lambda P: np.sum(chart_coeffs(P) * g.field(P), axis=-1)

    return PolarisedForm(model, 1, {(j,): restricted(j) for j in range(1, model.n + 1)}, twisted)


def theta_form(model: Model) -> PolarisedForm:
    """``Theta|_P`` as an untwisted 1-form: coefficients ``Theta(X_j)``."""
    return PolarisedForm(model, 1, {(j,): (lambda P, j=j: model.theta(j, P))
                                   for j in range(1, model.n + 1)}, twisted=False)


# --------------------------------------------------------------------------
# operators


def wedge(a: PolarisedForm, b: PolarisedForm) -> PolarisedForm:
    """Exterior product; at most one factor may be line-bundle valued."""
    _check_same(a, b)
    if a.twisted and b.twisted:
        raise FormError("wedge of two line-bundle valued forms is not defined")
    terms: dict = {}
    for I, fa in a.coeffs.items():
        for J, fb in b.coeffs.items():
            sign, K = _sort_sign(I + J)
            if sign == 0:
                continue
            terms.setdefault(K, []).append(
                (lambda P, fa=fa, fb=fb, s=sign: s * fa(P) * fb(P)))
    return PolarisedForm(a.model, a.degree + b.degree,
                         {K: _summed(v) for K, v in terms.items()}, a.twisted or b.twisted)


def interior_product(j: int, a: PolarisedForm) -> PolarisedForm:
    """Contraction with the generator ``X_j``."""
    a.model.generator(j)
    if a.degree == 0:
        raise FormError("interior product of a degree-0 form: S^-1 is empty")
    terms = {}
    for I, f in a.coeffs.items():
        if j in I:
            r = I.index(j)
            rest = I[:r] + I[r + 1:]
            terms.setdefault(rest, []).append(f if r % 2 == 0 else _scaled(f, -1.0))
    return PolarisedForm(a.model, a.degree - 1, {K: _summed(v) for K, v in terms.items()},
                         a.twisted)


def polarised_derivative(a: PolarisedForm, cfg: NumericsConfig = DEFAULT_CONFIG) -> PolarisedForm:
    """``d_P``: differentiate coefficients along the generators."""
    terms: dict = {}
    for I in a.coeffs:
        for j in range(1, a.model.n + 1):
            if j in I:
                continue
            sign, K = _sort_sign((j,) + I)
            d = a.derivative(I, j, cfg)
            terms.setdefault(K, []).append(d if sign > 0 else _scaled(d, -1.0))
    return PolarisedForm(a.model, a.degree + 1, {K: _summed(v) for K, v in terms.items()},
                         a.twisted)


def covariant_derivative(a: PolarisedForm, cfg: NumericsConfig = DEFAULT_CONFIG) -> PolarisedForm:
    """The Kostant coboundary ``d^nabla``.

    For ``a = alpha (x) s`` of degree ``l`` this is
    ``d_P alpha (x) s + (-1)^l alpha ^ nabla s = (d_P alpha - i Theta|_P ^ alpha) (x) s``.
    Untwisted forms get plain ``d_P``. Top-degree input returns the trivially
    zero form of degree ``n + 1``.
    """
    if a.degree >= a.model.n:
        return zero_form(a.model, a.degree + 1, a.twisted)
    dp = polarised_derivative(a, cfg)
    if not a.twisted:
        return dp
    return dp + (-1j) * wedge(theta_form(a.model), a)


def lie_derivative(j: int, a: PolarisedForm, cfg: NumericsConfig = DEFAULT_CONFIG) -> PolarisedForm:
    """Cartan formula ``i_X d^nabla + d^nabla i_X``."""
    out = interior_product(j, covariant_derivative(a, cfg)) if a.degree < a.model.n else None
    if a.degree >= 1:
        second = covariant_derivative(interior_product(j, a), cfg)
        out = second if out is None else out + second
    return out if out is not None else zero_form(a.model, a.degree, a.twisted)


def pullback(j: int, t, a: PolarisedForm) -> PolarisedForm:
    """Parallel-transport-twisted pullback along the flow of ``X_j`` at time ``t``.

    Coefficients become ``exp(-i t Theta(X_j)) * coeff o phi_t`` for twisted
    forms (plain ``coeff o phi_t`` otherwise). ``Theta(X_j)`` must be invariant
    along the ``X_j`` flow, which holds for every catalogued model; the
    co-basis indices are flow-invariant so no index transform is needed.
    """
    model = a.model
    model.generator(j)

    def pulled(fn):
        if a.twisted:
            return lambda P: np.exp(-1j * np.asarray(t) * model.theta(j, P)) * \
                fn(model.flow(j, P, t, wrap=False))
        return lambda P: fn(model.flow(j, P, t, wrap=False))

    return a.map_coeffs(pulled)


def multiply(fn: Coefficient, a: PolarisedForm) -> PolarisedForm:
    """Pointwise product of a scalar function with a form."""
    return a.map_coeffs(lambda c: (lambda P: fn(P) * c(P)))


def max_abs_difference(a: PolarisedForm, b: PolarisedForm, P) -> float:
    """Largest coefficient discrepancy between two forms at the points ``P``."""
    if a.degree != b.degree:
        raise FormError("degree mismatch")
    diff = a.values(P) - b.values(P)
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def max_abs(a: PolarisedForm, P) -> float:
    v = a.values(P)
    return float(np.max(np.abs(v))) if v.size else 0.0
