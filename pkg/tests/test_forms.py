import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kostant import forms as F
from kostant import verify as V
from kostant.models import ModelSpec, make_model
from kostant.numerics import NumericsConfig

CFG = NumericsConfig()
L2 = make_model(ModelSpec.linear(2))
FF = make_model(ModelSpec.focus_focus())
ONE = lambda P: np.ones(np.asarray(P).shape[:-1])


def test_basis_wedge_and_pointwise_product():
    a = F.basis_form(L2, (1,), lambda P: P[..., 0], twisted=False)
    b = F.basis_form(L2, (2,), lambda P: P[..., 1], twisted=False)
    w = F.wedge(a, b)
    assert w.degree == 2 and list(w.coeffs) == [(1, 2)]
    assert w.evaluate(np.array([2.0, 3.0, 0, 0]))[(1, 2)] == pytest.approx(6.0)
    swapped = F.wedge(b, a)
    assert swapped.evaluate(np.array([2.0, 3.0, 0, 0]))[(1, 2)] == pytest.approx(-6.0)


def test_odd_form_wedge_itself_vanishes():
    rng = np.random.default_rng(0)
    a = V.random_form(L2, 1, rng, twisted=False)
    assert F.max_abs(F.wedge(a, a), L2.sample(rng, 10)) < 1e-14


def test_two_twisted_factors_cannot_be_wedged():
    with pytest.raises(F.FormError):
        F.wedge(F.basis_form(L2, (1,)), F.basis_form(L2, (2,)))


def test_multi_indices_canonicalised():
    f = F.PolarisedForm(L2, 2, {(2, 1): ONE, (1, 1): ONE})
    assert list(f.coeffs) == [(1, 2)]
    assert f.evaluate(np.zeros(4))[(1, 2)] == -1
    assert F.PolarisedForm(L2, 3, {}).trivially_zero


def test_interior_product_pairings():
    P = np.array([0.3, 0.1, 0.5, 0.2])
    s1 = F.basis_form(L2, (1,), lambda P: 2.0 + P[..., 0])
    assert F.interior_product(1, s1).evaluate(P)[()] == pytest.approx(2.3)
    assert F.interior_product(1, F.basis_form(L2, (2,))).evaluate(P)[()] == 0
    two = F.basis_form(L2, (1, 2))
    assert F.max_abs(F.interior_product(1, F.interior_product(1, two)), P[None]) == 0
    with pytest.raises(F.FormError):
        F.interior_product(1, F.section(L2, ONE))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_interior_product_is_a_graded_derivation(seed):
    rng = np.random.default_rng(seed)
    a = V.random_form(L2, 1, rng, twisted=False)
    b = V.random_form(L2, 1, rng)
    P = L2.sample(rng, 5)
    for j in (1, 2):
        lhs = F.interior_product(j, F.wedge(a, b))
        rhs = F.wedge(F.interior_product(j, a), b) - F.wedge(a, F.interior_product(j, b))
        assert F.max_abs_difference(lhs, rhs, P) < 1e-12


def test_cylinder_section_derivative():
    cyl = make_model(ModelSpec.cylinder())
    d = F.covariant_derivative(F.section(cyl, ONE))
    P = np.array([[0.7, 1.3], [-1.2, 4.0]])
    assert np.allclose(d.values(P)[:, 0], -1j * P[:, 0])


def test_linear_flat_section_is_covariantly_constant():
    lin = make_model(ModelSpec.linear(1))
    s = F.section(lin, lambda P: np.exp(1j * P[..., 0] * P[..., 1]))
    assert F.max_abs(F.covariant_derivative(s), lin.sample(np.random.default_rng(0), 30)) < 1e-9


def test_top_degree_derivative_is_trivially_zero():
    d = F.covariant_derivative(F.basis_form(L2, (1, 2)))
    assert d.degree == 3 and d.trivially_zero


@pytest.mark.parametrize("model", [L2, FF, make_model(ModelSpec.elliptic(2, 1))],
                         ids=["linear2", "focus_focus", "elliptic21"])
def test_d_squared_vanishes(model):
    rng = np.random.default_rng(5)
    P = model.sample(rng, 100)
    for degree in (0, 1):
        a = V.random_form(model, degree, rng)
        assert F.max_abs(F.covariant_derivative(F.covariant_derivative(a)), P) < 1e-6


def test_leibniz_rule_for_wedge():
    rng = np.random.default_rng(7)
    a = V.random_form(FF, 1, rng, twisted=False)
    b = V.random_form(FF, 0, rng)
    P = FF.sample(rng, 30)
    lhs = F.covariant_derivative(F.wedge(a, b))
    rhs = F.wedge(F.polarised_derivative(a), b) - F.wedge(a, F.covariant_derivative(b))
    assert F.max_abs_difference(lhs, rhs, P) < 1e-7


def test_lie_derivative_vanishes_on_closed_form_with_zero_contraction():
    # e^2 (x) flat section on Linear(2): closed, and i_X1 of it is zero
    flat = lambda P: np.exp(1j * (P[..., 0] * P[..., 2] + P[..., 1] * P[..., 3]))
    a = F.basis_form(L2, (2,), flat)
    P = L2.sample(np.random.default_rng(1), 20)
    assert F.max_abs(F.covariant_derivative(a), P) < 1e-8
    assert F.max_abs(F.lie_derivative(1, a), P) < 1e-8


def test_lie_derivative_commutes_with_d():
    rng = np.random.default_rng(11)
    a = V.random_form(FF, 0, rng)
    P = FF.sample(rng, 20)
    for j in (1, 2):
        lhs = F.lie_derivative(j, F.covariant_derivative(a))
        rhs = F.covariant_derivative(F.lie_derivative(j, a))
        assert F.max_abs_difference(lhs, rhs, P) < 1e-6


def test_pullback_identity_cylinder_phase_and_group_law():
    cyl = make_model(ModelSpec.cylinder())
    rng = np.random.default_rng(2)
    c = V.random_function(cyl, rng)
    s = F.section(cyl, c)
    P = cyl.sample(rng, 10)
    assert F.max_abs_difference(F.pullback(1, 0.0, s), s, P) < 1e-15
    t = 0.8
    expected = np.exp(-1j * t * P[:, 0]) * c(P + np.array([0, t]))
    assert np.allclose(F.pullback(1, t, s).values(P)[:, 0], expected, atol=1e-13)
    ab = F.pullback(1, 0.3, F.pullback(1, 0.5, s))
    assert F.max_abs_difference(ab, F.pullback(1, 0.8, s), P) < 1e-12


def test_pullback_matches_ode_transport_on_cylinder():
    # transport of the unit gauge section along y: df/dt = -i x f
    cyl = make_model(ModelSpec.cylinder())
    s = F.section(cyl, ONE)
    x, t = 0.37, 1.9
    from kostant.numerics import rk4_refined
    y, _ = rk4_refined(lambda _, f: -1j * x * f, np.array([[1.0 + 0j]]), np.array([t]), 1e-12)
    assert abs(F.pullback(1, t, s).values(np.array([x, 0.2]))[0] - y[0, 0]) < 1e-10


def test_multiply_and_arithmetic():
    a = F.basis_form(L2, (1,), ONE)
    b = 2.0 * a - a + (-a)
    assert F.max_abs(b, np.zeros((1, 4))) == 0
    with pytest.raises(F.FormError):
        a + F.section(L2, ONE)
