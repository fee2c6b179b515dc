import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kostant.numerics import (IntegrationError, NumericsConfig, central_difference,
                              integrate_interval, rk4_adaptive, rk4_refined, simpson_rule)


def test_config_rejects_nonpositive_and_short_quadrature():
    with pytest.raises(ValueError):
        NumericsConfig(fd_step=0.0)
    with pytest.raises(ValueError):
        NumericsConfig(quadrature_steps=8)


@given(st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_richardson_difference_is_fourth_order_accurate(x):
    d = central_difference(lambda h: np.sin(x + h), 1e-3)
    assert abs(d - np.cos(x)) < 1e-12


def test_simpson_weights_integrate_cubics_exactly():
    s, w = simpson_rule(16)
    assert abs(np.sum(w) - 1.0) < 1e-15
    assert abs(np.sum(w * s ** 3) - 0.25) < 1e-15


def test_simpson_odd_interval_count_is_rounded_up():
    s, _ = simpson_rule(17)
    assert s.size == 19


def test_periodic_integrand_spectral_accuracy():
    val = integrate_interval(lambda t: np.exp(np.cos(t)), np.array(2 * np.pi), 64)
    from scipy.special import i0
    assert abs(val - 2 * np.pi * i0(1.0)) < 1e-12


def test_integrate_interval_zero_length():
    val = integrate_interval(lambda t: np.ones_like(t), np.array([0.0, 1.0]), 32)
    assert np.allclose(val, [0.0, 1.0])


def test_rk4_refined_on_complex_rotation():
    y, steps = rk4_refined(lambda t, y: 1j * y, np.array([[1.0 + 0j]]), np.array([2 * np.pi]), 1e-11)
    assert abs(y[0, 0] - 1.0) < 1e-9
    assert steps >= 128


def test_rk4_refined_reports_nonconvergence():
    with pytest.raises(IntegrationError) as exc:
        rk4_refined(lambda t, y: 50 * y, np.array([[1.0]]), np.array([10.0]), 1e-14, max_steps=256)
    assert exc.value.residual > 0


def test_rk4_adaptive_decay_reaches_stop_condition():
    y = rk4_adaptive(lambda z: -z, np.array([[1.0], [3.0]]), lambda z: np.abs(z[:, 0]) < 1e-10,
                     tol=1e-9, dt0=0.1, dt_max=2.0)
    assert np.all(np.abs(y) < 1e-10)
