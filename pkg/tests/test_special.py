import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilrestrict.special import (
    fit_laguerre_constant,
    hermite_all,
    hermite_deriv,
    hermite_direct,
    hermite_fn,
    hermite_laguerre_residual,
    hermite_rescaled,
    hermite_rescaled_deriv,
    laguerre_all,
    laguerre_fn,
    laguerre_poly_direct,
    oscillator_residual,
)


def mp_hermite_fn(ell, u):
    # normalised Hermite function in 60-digit arithmetic
    with mpmath.workdps(60):
        u = mpmath.mpf(u)
        norm = mpmath.sqrt(mpmath.sqrt(mpmath.pi) * mpmath.mpf(2) ** ell * mpmath.factorial(ell))
        return float(mpmath.hermite(ell, u) * mpmath.exp(-u * u / 2) / norm)


def mp_laguerre_fn(ell, v):
    with mpmath.workdps(60 + int(v)):
        v = mpmath.mpf(v)
        # binomial sum; 60 digits absorbs the cancellation for the sizes tested
        total = mpmath.fsum(mpmath.binomial(ell, k) * (-v) ** k / mpmath.factorial(k) for k in range(ell + 1))
        return float(total * mpmath.exp(-v / 2))


def test_hermite_ground_state_value():
    assert hermite_fn(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-14)
    assert hermite_fn(0, 0.0) == pytest.approx(0.7511255444, abs=1e-10)


def test_hermite_odd_degree_vanishes_at_origin():
    assert hermite_fn(1, 0.0) == 0.0


def test_hermite_degree5_matches_explicit_polynomial():
    # H_5(u) = 32u^5 - 160u^3 + 120u
    u = 1.3
    H5 = 32 * u ** 5 - 160 * u ** 3 + 120 * u
    expected = H5 * math.exp(-u * u / 2) / math.sqrt(math.sqrt(math.pi) * 2 ** 5 * math.factorial(5))
    assert hermite_fn(5, u) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("ell", range(21))
def test_recurrence_agrees_with_direct_formula(ell):
    u = np.linspace(-6, 6, 97)
    direct = hermite_direct(ell, u)
    rec = hermite_fn(ell, u)
    mask = np.abs(direct) > 1e-3
    assert np.max(np.abs(rec[mask] - direct[mask]) / np.abs(direct[mask])) < 1e-10
    assert np.max(np.abs(rec - direct)) < 1e-12


@pytest.mark.parametrize("ell,u", [(50, 3.0), (1000, 40.0), (10000, 141.0), (10000, 150.0)])
def test_high_degree_against_arbitrary_precision(ell, u):
    assert hermite_fn(ell, u) == pytest.approx(mp_hermite_fn(ell, u), rel=1e-8)


def test_large_degree_and_argument_stay_finite():
    vals = hermite_all(2000, np.array([-1000.0, -50.0, 0.0, 7.5, 1000.0]))
    assert np.all(np.isfinite(vals))


def test_hermite_all_shape():
    assert hermite_all(4, np.zeros((3, 2))).shape == (5, 3, 2)


@pytest.mark.parametrize("ell", [0, 1, 7, 30, 200])
def test_oscillator_equation(ell):
    u = np.linspace(-20, 20, 801)
    assert oscillator_residual(ell, u).max() < 1e-6 * (2 * ell + 1)


def test_first_derivative_of_ground_state():
    u = np.linspace(-4, 4, 33)
    assert np.allclose(hermite_deriv(0, u), -u * hermite_fn(0, u), atol=1e-15)


@pytest.mark.parametrize("ell", [1, 4, 9])
def test_ladder_derivative_against_finite_difference(ell):
    u = np.linspace(-3, 3, 25)
    step = 1e-4
    fd = (hermite_fn(ell, u + step) - hermite_fn(ell, u - step)) / (2 * step)
    assert np.allclose(hermite_deriv(ell, u, 1), fd, atol=1e-7)


def test_hermite_deriv_rejects_order_three():
    with pytest.raises(ValueError):
        hermite_deriv(2, 0.0, order=3)


def test_rescaled_at_origin():
    assert hermite_rescaled(0, 1, 0.0) == pytest.approx(2 ** 0.25, rel=1e-14)


def test_rescaled_is_definitional_composition():
    s = math.sqrt(4 * math.pi)
    assert hermite_rescaled(3, 2, 0.25) == pytest.approx(hermite_fn(3, s * 0.25) * s ** 0.5, rel=1e-14)


@pytest.mark.parametrize("ell,lam", [(0, 1), (3, 2), (6, -5)])
def test_rescaled_has_unit_norm(ell, lam):
    u = np.linspace(-4, 4, 8001)
    vals = hermite_rescaled(ell, lam, u)
    assert np.sum(vals ** 2) * (u[1] - u[0]) == pytest.approx(1.0, abs=1e-10)


def test_rescaled_rejects_zero_lambda():
    with pytest.raises(ValueError, match="nonzero"):
        hermite_rescaled(0, 0, 0.1)


def test_rescaled_second_derivative_matches_eigen_equation():
    lam, ell = 3, 4
    u = np.linspace(-1.5, 1.5, 61)
    h = hermite_rescaled(ell, lam, u)
    h2 = hermite_rescaled_deriv(ell, lam, u, order=2)
    lhs = -h2 + (2 * math.pi * lam * u) ** 2 * h
    assert np.max(np.abs(lhs - 2 * math.pi * lam * (2 * ell + 1) * h)) < 1e-9


@pytest.mark.parametrize("v", [0.0, 1.0, 4.0])
def test_laguerre_ground_state(v):
    assert laguerre_fn(0, v) == pytest.approx(math.exp(-v / 2), rel=1e-15)


@pytest.mark.parametrize("ell", [0, 1, 5, 100, 1000])
def test_laguerre_at_zero_is_one(ell):
    assert laguerre_fn(ell, 0.0) == pytest.approx(1.0, rel=1e-13)


def test_laguerre_degree4_binomial_sum():
    v = 2.5
    L4 = 1 - 4 * v + 3 * v ** 2 - (2 / 3) * v ** 3 + v ** 4 / 24
    assert laguerre_fn(4, v) == pytest.approx(L4 * math.exp(-1.25), rel=1e-13)
    assert laguerre_poly_direct(4, v) == pytest.approx(L4, rel=1e-14)


@pytest.mark.parametrize("ell", range(21))
def test_laguerre_recurrence_against_oracle(ell):
    # the binomial sum cancels badly for large v, so use extended precision
    v = np.linspace(0, 30, 61)
    oracle = np.array([mp_laguerre_fn(ell, x) for x in v])
    assert np.max(np.abs(laguerre_fn(ell, v) - oracle)) < 1e-12
    small = v[v <= 5]
    direct = laguerre_poly_direct(ell, small) * np.exp(-small / 2)
    assert np.max(np.abs(laguerre_fn(ell, small) - direct)) < 1e-10


@pytest.mark.parametrize("ell,v", [(500, 1500.0), (500, 2100.0), (60, 7.3)])
def test_laguerre_against_arbitrary_precision(ell, v):
    assert laguerre_fn(ell, v) == pytest.approx(mp_laguerre_fn(ell, v), rel=1e-8, abs=1e-300)


def test_laguerre_rejects_negative_argument():
    with pytest.raises(ValueError):
        laguerre_fn(2, -0.1)


def test_laguerre_all_rows_match_single_evaluation():
    v = np.geomspace(1e-3, 1e3, 17)
    table = laguerre_all(12, v)
    for ell in (0, 5, 12):
        assert np.allclose(table[ell], laguerre_fn(ell, v), rtol=0, atol=1e-15)


def test_laguerre_sup_bound_and_decay_constant():
    v = np.geomspace(1e-3, 1e4, 400)
    table = np.abs(laguerre_all(500, v))
    assert table.max() <= 1.0
    C, sup = fit_laguerre_constant(500)
    assert sup <= 1.0
    assert math.isfinite(C) and C > 0
    degrees = np.arange(501)[:, None]
    assert np.all(table * v <= C * (2 * degrees + 1) * (1 + 1e-12))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.floats(0, 200))
def test_laguerre_bounded_by_one(ell, v):
    assert abs(float(laguerre_fn(ell, v))) <= 1.0 + 1e-12


def test_hermite_laguerre_identity_at_origin():
    assert hermite_laguerre_residual(0, 0.0, 0.0) < 1e-10


def test_hermite_laguerre_identity_examples():
    assert hermite_laguerre_residual(3, 1.0, 0.5, quad_points=400, half_width=12.0) < 1e-8
    assert hermite_laguerre_residual(1, 0.0, 2.0) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 12), st.floats(-3, 3), st.floats(-3, 3))
def test_hermite_laguerre_identity_random(ell, x, y):
    assert hermite_laguerre_residual(ell, x, y, quad_points=800) < 1e-8


def test_hermite_orthonormality():
    xi = np.linspace(-15, 15, 3001)
    H = hermite_all(15, xi) * math.sqrt(xi[1] - xi[0])
    assert np.max(np.abs(H @ H.T - np.eye(16))) < 1e-8
