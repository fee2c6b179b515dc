import numpy as np
import pytest

from kostant import forms as F
from kostant import verify as V
from kostant.bohr_sommerfeld import Polytope
from kostant.cli_io import emit_report
from kostant.models import Convention, ModelSpec, make_model
from kostant.quantisation import (AlmostToric4, DescriptorError, DirectSum, FibrationDescriptor,
                                  FiniteDim, FunctionSpace, LagrangianBundle, MarkedPoint,
                                  ModelChart, NoTheoremError, ToricPolytope, Unresolved, Zero,
                                  kunneth_project, normalise, product_factorise, quantise,
                                  scale_entry)


def chart(spec, window=None, **kw):
    return FibrationDescriptor(ModelChart(spec), window=window, **kw)


def test_cylinder_report():
    rep = quantise(chart(ModelSpec.cylinder(), {"x": [-2.5, 2.5]}))
    assert rep.entry(1) == FiniteDim(5) and rep.entry(0) == Zero()
    assert rep.nonzero_degrees() == [1]
    assert rep.h0_witness["dense"]


def test_linear_report():
    rep = quantise(chart(ModelSpec.linear(3)))
    assert rep.entry(0) == FunctionSpace(3, 1)
    assert rep.nonzero_degrees() == [0] and sorted(rep.per_degree) == [0, 1, 2, 3]


def test_square_report():
    square = Polytope.from_rows([[1, 0, 0], [-1, 0, 3], [0, 1, 0], [0, -1, 3]])
    rep = quantise(FibrationDescriptor(ToricPolytope(square), compact=True))
    assert rep.entry(2) == FiniteDim(4) and rep.nonzero_degrees() == [2]
    with pytest.raises(NoTheoremError):
        quantise(FibrationDescriptor(ToricPolytope(square), compact=False))


def test_almost_toric_report_has_unresolved_blocks():
    strip = Polytope.from_rows([[1, 0, 0], [-1, 0, 5], [0, 1, 0], [0, -1, 2]])
    rep = quantise(FibrationDescriptor(AlmostToric4(strip, (MarkedPoint((2, 1)),)), compact=True))
    assert isinstance(rep.entry(2), DirectSum)
    assert FiniteDim(3) in rep.entry(2).parts
    assert any(isinstance(p, Unresolved) for p in rep.entry(2).parts)
    assert isinstance(rep.entry(1), Unresolved)
    assert rep.entry(0) == Zero()


def test_almost_toric_rejects_bad_marks():
    strip = Polytope.box([0, 0], [5, 2])
    with pytest.raises(DescriptorError):
        quantise(FibrationDescriptor(AlmostToric4(strip, (MarkedPoint((2, 1), 0),)),
                                     compact=True))
    with pytest.raises(DescriptorError):
        quantise(FibrationDescriptor(AlmostToric4(Polytope.box([0], [3]), ()), compact=True))


def test_product_factorise_examples():
    one = quantise(chart(ModelSpec.cylinder(), {"x": [-0.5, 0.5]}))
    lin = quantise(chart(ModelSpec.linear(1)))
    prod = product_factorise(one, lin)
    assert prod.entry(1) == FunctionSpace(1, 1) and prod.nonzero_degrees() == [1]
    none = quantise(chart(ModelSpec.cylinder(), {"x": [0.2, 0.8]}))
    assert product_factorise(none, lin).nonzero_degrees() == []
    with pytest.raises(NoTheoremError):
        product_factorise(lin, one)


def test_product_chart_with_non_circle_left_factor():
    with pytest.raises(NoTheoremError):
        quantise(chart(ModelSpec.product(ModelSpec.linear(1), ModelSpec.cylinder()),
                       {"right.x": [-1, 1]}))


def test_disk_product_uses_nonsingular_count():
    disk = quantise(chart(ModelSpec.disk(), {"F": [None, 4.5]}))
    assert disk.entry(1) == FiniteDim(2)  # labels 0, 2, 4 under the transport convention
    prod = quantise(chart(ModelSpec.product(ModelSpec.disk(), ModelSpec.linear(1)),
                          {"left.F": [None, 4.5]}))
    assert prod.entry(1) == FunctionSpace(1, 2)


def test_bundle_dispatch():
    rep = quantise(FibrationDescriptor(LagrangianBundle(1, 2, 4), compact=True))
    assert rep.entry(1) == FunctionSpace(1, 4)
    with pytest.raises(NoTheoremError):
        quantise(FibrationDescriptor(LagrangianBundle(0, 2, 4)))
    with pytest.raises(DescriptorError):
        quantise(FibrationDescriptor(LagrangianBundle(3, 2, 4)))


def test_offsets_required_when_zero_fibre_not_bs():
    with pytest.raises(NoTheoremError):
        quantise(chart(ModelSpec.cylinder(), {"x": [-2, 2]}, zero_fibre_bs=False))
    shifted = quantise(chart(ModelSpec.cylinder(), {"x": [-2, 2]}, zero_fibre_bs=False,
                             offsets={"x": 0.5}))
    assert shifted.entry(1) == FiniteDim(4)
    assert [r.label for r in shifted.bs_fibres] == [(-1.5,), (-0.5,), (0.5,), (1.5,)]


def test_elliptic_top_case_matches_orthant_lattice_count():
    for n in (1, 2, 3):
        spec = ModelSpec.elliptic(n, n)
        window = {f"F{i + 1}": [None, 3.5] for i in range(n)}
        if n == 1:
            window = {make_model(spec).moment_names[0]: [None, 3.5]}
        direct = quantise(chart(spec, window), convention=Convention.PAPER_PRINTED)
        orthant = Polytope.box([0] * n, ["7/2"] * n)
        hamilton = quantise(FibrationDescriptor(ToricPolytope(orthant), compact=True))
        assert direct.entry(n) == hamilton.entry(n) == FiniteDim(3 ** n)


def test_focus_focus_chart_is_unresolved_above_degree_zero():
    ff = make_model(ModelSpec.focus_focus())
    rep = quantise(chart(ModelSpec.focus_focus(), {n: [-1.5, 1.5] for n in ff.moment_names}))
    assert rep.entry(0) == Zero()
    assert isinstance(rep.entry(1), Unresolved) and isinstance(rep.entry(2), Unresolved)


def test_reports_are_deterministic():
    strip = Polytope.box([0, 0], [5, 2])
    desc = FibrationDescriptor(AlmostToric4(strip, (MarkedPoint((2, 1)),)), compact=True)
    assert emit_report(quantise(desc, seed=7)) == emit_report(quantise(desc, seed=7))
    cyl = chart(ModelSpec.cylinder(), {"x": [-2.5, 2.5]})
    assert emit_report(quantise(cyl, seed=1)) == emit_report(quantise(cyl, seed=1))


def test_normalise_rules():
    assert normalise(FiniteDim(0)) == Zero()
    assert normalise(FunctionSpace(0, 3)) == FiniteDim(3)
    s = normalise(DirectSum((FiniteDim(2), DirectSum((FiniteDim(1), Zero())),
                             FunctionSpace(1, 1), FunctionSpace(1, 2))))
    assert s == DirectSum((FiniteDim(3), FunctionSpace(1, 3)))
    assert scale_entry(Unresolved("r"), 2).multiplicity == 2
    assert scale_entry(FiniteDim(4), 0) == Zero()


PRODUCT = make_model(ModelSpec.product(ModelSpec.cylinder(), ModelSpec.cylinder()))


def test_kunneth_of_exact_form_is_exact():
    rng = np.random.default_rng(0)
    sigma = F.section(PRODUCT, V.random_function(PRODUCT, rng))
    a = F.covariant_derivative(sigma)
    # J_X(d sigma) = (Q^-1 - 1) sigma, and Q = 1 on the left BS leaf x_left = 0
    for left_angle in (0.7, 2.9):
        p = np.array([0.0, left_angle, 0.3, 1.1])
        assert abs(kunneth_project(PRODUCT, 1, a, p)[()]) < 1e-5


def test_kunneth_kills_forms_without_left_leg():
    # right-leg 1-form e^2 with a flat coefficient: closed, and i_X a = 0
    flat = lambda P: np.exp(1j * (P[..., 0] * P[..., 1] + P[..., 2] * P[..., 3]))
    a = F.basis_form(PRODUCT, (2,), flat)
    val = kunneth_project(PRODUCT, 1, a, np.array([0.0, 0.2, 1.0, 0.4]))
    assert all(abs(v) < 1e-12 for v in val.values())


def test_kunneth_of_left_leg_wedge_flat_right_section():
    flat = lambda P: np.exp(1j * P[..., 2] * P[..., 3])
    a = F.basis_form(PRODUCT, (1,), flat)
    p = np.array([0.0, 0.5, 1.0, 0.4])
    val = kunneth_project(PRODUCT, 1, a, p)[()]
    assert val == pytest.approx(2 * np.pi * np.exp(0.4j), abs=1e-10)
