import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kostant import circle_action as C
from kostant import forms as F
from kostant import verify as V
from kostant.models import Convention, ModelError, ModelSpec, make_model
from kostant.numerics import NumericsConfig, TWO_PI, integrate_interval

CFG = NumericsConfig()
CYL = make_model(ModelSpec.cylinder())
DISK = make_model(ModelSpec.disk())
FF = make_model(ModelSpec.focus_focus())
ONE = lambda P: np.ones(np.asarray(P).shape[:-1])


def _hol(model, p, j=None):
    j = j or C.default_generator(model)
    return C.holonomy_formula(model, C.OrbitSample(tuple(p), j))


def test_holonomy_formula_examples():
    assert _hol(CYL, (0.5, 0.0)).value == pytest.approx(-1)
    assert _hol(CYL, (0.0, 1.0)).value == pytest.approx(1)
    assert _hol(FF, (1, 0, 0, 1), 2).value == pytest.approx(1)
    h = _hol(DISK, (1.0, 0.0))
    assert h.period == pytest.approx(np.pi) and h.value == pytest.approx(-1)
    fixed = _hol(DISK, (0.0, 0.0))
    assert fixed.fixed_point and fixed.value == 1 and fixed.period == 0


def test_holonomy_transport_examples():
    orbit = lambda p, j: C.OrbitSample(p, j)
    assert C.holonomy_transport(CYL, orbit((0.25, 0.0), 1)).value == pytest.approx(1j, abs=1e-9)
    assert C.holonomy_transport(FF, orbit((1, 0, 0, 0.5), 2)).value == pytest.approx(-1, abs=1e-9)
    assert C.holonomy_transport(DISK, orbit((0.0, 0.0), 1)).value == 1


def test_holonomy_has_unit_modulus():
    P = FF.sample(np.random.default_rng(0), 100)
    assert np.allclose(np.abs(C.holonomy_values(FF, 2, P)), 1, atol=1e-12)


def test_non_circle_generator_rejected():
    with pytest.raises(ModelError):
        C.holonomy_values(FF, 1, np.ones(4))
    with pytest.raises(ModelError):
        C.default_generator(make_model(ModelSpec.linear(1)))


def test_homotopy_vanishes_at_disk_origin():
    rng = np.random.default_rng(0)
    a = V.random_chart_one_form(DISK, rng)
    assert C.homotopy_operator(1, a, np.zeros(2))[()] == 0


def test_homotopy_of_dy_on_cylinder_closed_form():
    a = F.basis_form(CYL, (1,))
    for x in (0.3, -1.7, 2.0 ** 0.5):
        got = C.homotopy_operator(1, a, np.array([x, 0.4]))[()]
        expected = (np.exp(-2j * np.pi * x) - 1) / (-1j * x)
        # independent oracle: fine quadrature at 2^14 intervals
        fine = integrate_interval(lambda t: np.exp(-1j * t * x), np.array(TWO_PI), 2 ** 14)
        # 2048-interval Simpson sits a few 1e-12 off the exact value
        assert got == pytest.approx(expected, abs=1e-9)
        assert fine == pytest.approx(expected, abs=1e-12)


def test_homotopy_identity_for_sections_at_irrational_x():
    s = F.section(CYL, ONE)
    P = np.array([[2 ** 0.5, 0.3], [np.pi / 3, 2.0]])
    assert C.homotopy_identity_residual(1, s, P) < 1e-6


def test_homotopy_identity_top_degree():
    rng = np.random.default_rng(4)
    a = V.random_form(FF, 2, rng)
    assert C.homotopy_identity_residual(2, a, FF.sample(rng, 20)) < 1e-6


def test_local_flat_section_away_from_bs_orbits():
    # exp(i x y) is flat along y everywhere but only y-periodic at integer x,
    # which is why the holonomy factor is nonzero off those orbits
    s = F.section(CYL, lambda P: np.exp(1j * P[..., 0] * P[..., 1]))
    P = np.array([[1.0, 0.2], [-2.0, 1.0], [0.5, 0.3]])
    ds = F.covariant_derivative(s).values(P)[:, 0]
    assert np.allclose(ds, 0, atol=1e-8)
    assert abs(C.holonomy_factor(CYL, 1, P[2:])[0]) > 1


@given(st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_homotopy_identity_property(seed):
    rng = np.random.default_rng(seed)
    for model in (CYL, DISK, FF):
        j = C.default_generator(model)
        a = V.random_chart_one_form(model, rng)
        assert C.homotopy_identity_residual(j, a, model.sample(rng, 2)) < 1e-6


def test_exactness_potential_on_cylinder():
    a = F.basis_form(CYL, (1,))
    beta = C.exactness_potential_form(1, a)
    P = np.array([[0.5, 0.2], [0.3, 1.0]])
    assert F.max_abs_difference(F.covariant_derivative(beta), a, P) < 1e-5
    with pytest.raises(C.HolonomyTrivialError):
        C.exactness_potential(1, a, np.array([1.0, 0.3]))


def test_exactness_potential_of_exact_input():
    rng = np.random.default_rng(9)
    sigma = F.section(CYL, V.random_function(CYL, rng))
    a = F.covariant_derivative(sigma)
    beta = C.exactness_potential_form(1, a)
    P = V.non_bs_cylinder_points(rng, 10)
    assert F.max_abs_difference(F.covariant_derivative(beta), a, P) < 1e-5
    # on the cylinder beta recovers sigma itself (degree-0 potentials are unique off BS)
    assert F.max_abs_difference(beta, sigma, P) < 1e-8


def test_exactness_requires_closed_input():
    rng = np.random.default_rng(2)
    a = V.random_form(FF, 1, rng)
    with pytest.raises(C.NotClosedError):
        C.exactness_potential(2, a, np.array([0.3, 0.5, -0.2, 0.9]))


def test_division_examples():
    P = np.array([[0.7, 0.4], [1.0, 0.0], [0.0, 0.0], [2 ** 0.5, 0.0], [0.2, -0.9]])
    f1 = lambda Z: C.holonomy_factor(DISK, 1, Z) * 1.0
    assert np.allclose(C.holonomy_division(DISK, f1, P), 1, atol=1e-6)
    g = lambda Z: Z[..., 0] + 1j * Z[..., 1]
    f2 = lambda Z: C.holonomy_factor(DISK, 1, Z) * g(Z)
    assert np.allclose(C.holonomy_division(DISK, f2, P), g(P), atol=1e-6)
    # away from {Q = 1} the result equals plain pointwise division
    far = P[[0, 4]]
    assert np.allclose(C.holonomy_division(DISK, f2, far), f2(far) / C.holonomy_factor(DISK, 1, far))


def test_division_under_printed_convention_and_focus_focus():
    disk = make_model(ModelSpec.disk(), Convention.PAPER_PRINTED)
    g = lambda Z: np.cos(Z[..., 0]) + 1j * Z[..., 1]
    f = lambda Z: C.holonomy_factor(disk, 1, Z) * g(Z)
    P = np.array([[1.0, 0.0], [0.0, 1.0], [0.3, 0.3], [0.0, 0.0]])
    assert np.allclose(C.holonomy_division(disk, f, P), g(P), atol=1e-6)
    gf = lambda Z: np.exp(-np.sum(Z ** 2, axis=-1) / 4)
    ff = lambda Z: C.holonomy_factor(FF, 2, Z) * gf(Z)
    Q = np.array([[1.0, 0, 0, 1.0], [0.5, 0.2, 0.1, 0.3], [1.0, 0.5, 2.0, 1.0]])
    assert np.allclose(C.holonomy_division(FF, ff, Q), gf(Q), atol=1e-6)


def test_division_obstruction():
    with pytest.raises(C.DivisionObstructionError):
        C.holonomy_division(DISK, lambda Z: np.ones(Z.shape[:-1]) + 0j, np.array([[0.5, 0.5]]))


def test_gradient_flow_lands_on_integer_level():
    P = np.array([[1.3, 0.2], [0.4, 0.1], [1e-4, 0.0]])
    z = C.gradient_flow_limit(DISK, 1, P)
    h = np.sum(z ** 2, axis=-1) / 2
    assert np.allclose(h, np.round(h), atol=1e-12)


def test_denominator_integral():
    assert C.holonomy_denominator(0.0) == pytest.approx(1.0)
    h = np.array([0.3, 1.7])
    closed = (np.exp(-2j * np.pi * h) - 1) / (-2j * np.pi * h)
    assert np.allclose(C.holonomy_denominator(h), closed, atol=1e-12)


def test_holonomy_constant_along_polarisation():
    rng = np.random.default_rng(0)
    for model in (CYL, DISK, FF, make_model(ModelSpec.elliptic(2, 1))):
        j = C.default_generator(model)
        for p in model.sample(rng, 5):
            assert C.holonomy_constancy_check(model, j, p) < 1e-9


def test_focus_phase_integrals():
    lams = np.array([0.1, 0.5, 1.7, 1.0, -1.0])
    for kind in ("cos", "sin"):
        quad = C.focus_phase_integral(lams, kind=kind)
        assert np.allclose(quad, C.focus_phase_closed_form(lams, kind), atol=1e-8)
    assert abs(C.focus_phase_integral(np.array([0.0]))[0]) < 1e-12


def test_focus_focus_vanishing_needs_invariant_coefficients():
    """J_X of x2 dx1 at (1,0,0,0) is pi, not 0: the cone statement does not cover
    arbitrary smooth 1-forms, only rotation-invariant coefficients and exact forms."""
    a = F.from_chart_one_form(FF, lambda P: np.stack(
        [P[..., 1], 0 * P[..., 0], 0 * P[..., 0], 0 * P[..., 0]], axis=-1))
    val = C.homotopy_operator(2, a, np.array([1.0, 0, 0, 0]))[()]
    assert val == pytest.approx(np.pi, abs=1e-9)


def test_invariant_and_exact_forms_vanish_on_cone():
    rng = np.random.default_rng(8)
    P = V.focus_cone_points(rng, 30)
    assert np.allclose(np.abs(P[:, 0] * P[:, 3] - P[:, 1] * P[:, 2]), 0, atol=1e-12)
    a = V.invariant_chart_one_form(FF, rng)
    assert F.max_abs(C.homotopy_form(2, a), P) < 1e-6
    e = F.covariant_derivative(F.section(FF, V.random_function(FF, rng)))
    assert F.max_abs(C.homotopy_form(2, e), P) < 1e-6


def test_dense_holonomy_witness():
    P = CYL.sample(np.random.default_rng(0), 1000)
    w = C.dense_holonomy_witness(CYL, 1, P)
    assert w["samples"] == 1000 and w["nontrivial_fraction"] == 1.0
    BS = np.array([[1.0, 0.0], [2.0, 1.0]])
    assert C.dense_holonomy_witness(CYL, 1, BS)["nontrivial_fraction"] == 0.0
