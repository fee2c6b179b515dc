from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kostant import verify as V
from kostant.bohr_sommerfeld import (FOCUS_FOCUS, REGULAR, Polytope, PolytopeError, Regularity,
                                     WindowError, convention_comparison, elliptic_singular,
                                     enumerate_bs_fibres, fibre_point, is_bs_point,
                                     lattice_points, nonsingular_count, polytope_fibres)
from kostant.circle_action import holonomy_values
from kostant.models import Convention, ModelSpec, make_model

CYL = make_model(ModelSpec.cylinder())


def test_bs_point_examples():
    assert is_bs_point(CYL, [1.0, 0.3])
    assert not is_bs_point(CYL, [0.5, 0.3])
    ff = make_model(ModelSpec.focus_focus())
    assert is_bs_point(ff, [1.0, 0.0, 0.0, 1.0])
    assert is_bs_point(make_model(ModelSpec.linear(2)), [0.3, 0.1, 0.2, 0.7])


def test_cylinder_enumeration_matches_brute_scan():
    recs = enumerate_bs_fibres(CYL, {"x": [-2.5, 2.5]})
    assert [r.label for r in recs] == [(-2,), (-1,), (0,), (1,), (2,)]
    assert all(r.regularity == REGULAR and r.fibre_dim == 1 for r in recs)
    xs = np.arange(-2499, 2500) / 1000.0
    hits = xs[np.abs(holonomy_values(CYL, 1, np.stack([xs, 0 * xs], -1)) - 1) < 1e-8]
    assert sorted(set(np.round(hits).astype(int))) == [-2, -1, 0, 1, 2]


def test_disk_labels_under_both_conventions():
    both = convention_comparison(make_model(ModelSpec.disk()), {"F": [None, 3.5]})
    oracle = both[Convention.TRANSPORT_ORACLE.value]
    printed = both[Convention.PAPER_PRINTED.value]
    assert [r.label[0] for r in printed] == [0, 1, 2, 3]
    assert printed[0].regularity == elliptic_singular(0) and nonsingular_count(printed) == 3
    assert [r.label[0] for r in oracle] == [0, 2]
    assert nonsingular_count(oracle) == 1


def test_liouville_family_labels():
    model = make_model(ModelSpec.liouville(2, 1))
    recs = enumerate_bs_fibres(model, {"x1": [-0.5, 1.5]})
    assert [r.label for r in recs] == [(0, None), (1, None)]


def test_focus_focus_critical_fibre_classified():
    ff = make_model(ModelSpec.focus_focus())
    names = ff.moment_names
    recs = enumerate_bs_fibres(ff, {n: [-1.5, 1.5] for n in names})
    crit = [r for r in recs if r.regularity == FOCUS_FOCUS]
    assert len(crit) == 1 and crit[0].fibre_dim == 2


def test_window_errors():
    with pytest.raises(WindowError):
        enumerate_bs_fibres(CYL, {"x": [None, 2.0]})
    with pytest.raises(WindowError):
        enumerate_bs_fibres(CYL, {"q": [0, 1]})
    with pytest.raises(WindowError):
        enumerate_bs_fibres(CYL, {"x": [2, 1]})


def test_lattice_point_examples():
    square = Polytope.box([0, 0], [3, 3])
    inner, bdry = lattice_points(square)
    assert sorted(inner) == [(1, 1), (1, 2), (2, 1), (2, 2)] and len(bdry) == 12
    inner, bdry = lattice_points(Polytope.from_rows([[1, 0], [-1, 2]]))
    assert inner == [(1,)] and sorted(bdry) == [(0,), (2,)]
    simplex = Polytope.from_rows([[1, 0, 0], [0, 1, 0], [-1, -1, 2]])
    inner, bdry = lattice_points(simplex)
    assert inner == [] and len(bdry) == 6


def test_rational_offsets_are_exact():
    # x in [1/3, 7/3]: 1 and 2 are interior, no boundary lattice point
    inner, bdry = lattice_points(Polytope.from_rows([[1, "-1/3"], [-1, Fraction(7, 3)]]))
    assert sorted(inner) == [(1,), (2,)] and bdry == []


def test_polytope_errors():
    with pytest.raises(PolytopeError):
        lattice_points(Polytope.from_rows([[1, 0, 0], [0, 1, 0]]))
    with pytest.raises(PolytopeError):
        Polytope.from_rows([[0, 0, 1]])
    with pytest.raises(PolytopeError):
        Polytope.from_rows([[0.5, 1]])


def test_toric_fibres_carry_face_dimension():
    recs = {r.label: r for r in polytope_fibres(Polytope.box([0, 0], [3, 3]))}
    assert recs[(0, 0)].fibre_dim == 0 and recs[(0, 1)].fibre_dim == 1
    assert recs[(1, 1)].regularity == REGULAR


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_lattice_points_match_brute_force(seed):
    poly = V.random_polytope(np.random.default_rng(seed))
    inner, bdry = lattice_points(poly)
    b_inner, b_bdry = V.brute_force_lattice(poly)
    assert sorted(inner) == sorted(b_inner) and sorted(bdry) == sorted(b_bdry)


def test_enumerated_labels_are_bs_and_half_shifts_are_not():
    rng = np.random.default_rng(3)
    for spec, window in ((ModelSpec.cylinder(), {"x": [-3.5, 3.5]}),
                         (ModelSpec.disk(), {"F": [None, 6.5]}),
                         (ModelSpec.elliptic(2, 1), None)):
        model = make_model(spec)
        if window is None:
            window = {n: [-2.5, 2.5] for n in model.moment_names}
            window[model.moments[0].name] = [None, 4.5]
        for rec in enumerate_bs_fibres(model, window):
            p = fibre_point(model, rec, rng)
            assert is_bs_point(model, p)
            for j in model.circle_generators():
                for t in (0.3, 1.1):
                    assert is_bs_point(model, model.flow(j, p, t))


def test_half_shift_fails_on_cylinder():
    for m in range(-2, 3):
        assert not is_bs_point(CYL, [m + 0.5, 0.0])


def test_regularity_text_roundtrip():
    for r in (REGULAR, FOCUS_FOCUS, elliptic_singular(0), elliptic_singular(3)):
        assert Regularity.parse(str(r)) == r
    with pytest.raises(ValueError):
        Regularity.parse("Weird")
