import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilrestrict.group import (
    IDENTITY,
    GroupElement,
    central_difference,
    hermite_window,
    infinitesimal_action,
    inverse,
    matrix_coefficient,
    multiply,
    reduce_mod_gamma,
    schrodinger_apply,
)
from nilrestrict.special import hermite_fn, laguerre_fn

coord = st.floats(-50, 50, allow_nan=False)
elements = st.builds(GroupElement, coord, coord, coord)


def close(x, y, tol=1e-12):
    return all(abs(s - t) <= tol * max(1.0, abs(s), abs(t)) for s, t in zip(x.as_tuple(), y.as_tuple()))


def test_multiply_hand_example():
    assert GroupElement(1, 2, 3) * GroupElement(4, 5, 6) == GroupElement(5, 7, 14)


def test_identity_is_neutral():
    x = GroupElement(0.4, -1.2, 3.3)
    assert multiply(x, IDENTITY) == x
    assert multiply(IDENTITY, x) == x


def test_explicit_inverse_formula():
    a, b, c = 1.5, -2.0, 0.75
    assert multiply(GroupElement(a, b, c), GroupElement(-a, -b, -c + a * b)) == IDENTITY


def test_inverse_examples():
    assert inverse(IDENTITY) == IDENTITY
    assert inverse(GroupElement(1, 1, 0)) == GroupElement(-1, -1, 1)


@settings(max_examples=200)
@given(elements)
def test_inverse_is_two_sided(x):
    assert close(multiply(inverse(x), x), IDENTITY)
    assert close(multiply(x, inverse(x)), IDENTITY)


@settings(max_examples=200)
@given(elements, elements, elements)
def test_associativity(x, y, z):
    assert close(multiply(multiply(x, y), z), multiply(x, multiply(y, z)), 1e-10)


def test_group_is_not_abelian():
    x, y = GroupElement(1, 0, 0), GroupElement(0, 1, 0)
    assert multiply(x, y) != multiply(y, x)


def test_reduce_inside_domain_is_trivial():
    red = reduce_mod_gamma(GroupElement(0.3, 0.7, 0.2))
    assert close(red.rep, GroupElement(0.3, 0.7, 0.2))
    assert red.gamma == IDENTITY


def test_reduce_with_integer_shift_in_a():
    x = GroupElement(1.3, 0.7, 0.2)
    red = reduce_mod_gamma(x)
    assert close(red.rep, GroupElement(0.3, 0.7, 0.5))
    assert red.gamma.is_integral()
    assert close(multiply(red.gamma, red.rep), x)


def test_reduce_central_only():
    red = reduce_mod_gamma(GroupElement(0, 0, 2.25))
    assert red.gamma == GroupElement(0, 0, 2)
    assert close(red.rep, GroupElement(0, 0, 0.25))


@settings(max_examples=300)
@given(elements)
def test_reduction_reassembles_into_unit_cube(x):
    red = reduce_mod_gamma(x)
    assert all(0.0 <= t < 1.0 for t in red.rep.as_tuple())
    assert red.gamma.is_integral()
    assert close(multiply(red.gamma, red.rep), x, 1e-10)


@settings(max_examples=100)
@given(elements, st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_reduction_is_gamma_invariant(x, m, n, p):
    g = GroupElement(m, n, p)
    r1, r2 = reduce_mod_gamma(x), reduce_mod_gamma(multiply(g, x))
    # both representatives lie in one coset: r2 r1^-1 is integral
    shift = multiply(r2.rep, inverse(r1.rep)).as_tuple()
    assert all(abs(t - round(t)) < 1e-8 for t in shift)


U = np.linspace(-3, 3, 121)


def test_schrodinger_identity_leaves_h_unchanged():
    h = hermite_window(2, 3)
    assert np.allclose(schrodinger_apply(3, IDENTITY, h, U), h(U), rtol=0, atol=0)


def test_schrodinger_center_acts_by_scalar():
    h = hermite_window(1, 2)
    out = schrodinger_apply(2, GroupElement(0, 0, 0.37), h, U)
    assert np.allclose(out, np.exp(2j * math.pi * 2 * 0.37) * h(U), atol=1e-15)


def test_schrodinger_rejects_zero_lambda():
    with pytest.raises(ValueError):
        schrodinger_apply(0, IDENTITY, hermite_window(0, 1), U)


def test_schrodinger_is_a_homomorphism():
    rng = np.random.default_rng(5)
    h = hermite_window(3, 2)
    for _ in range(20):
        x = GroupElement(*rng.uniform(-2, 2, 3))
        y = GroupElement(*rng.uniform(-2, 2, 3))
        inner = lambda u, y=y: schrodinger_apply(-3, y, h, u)
        two_step = schrodinger_apply(-3, x, inner, U)
        one_step = schrodinger_apply(-3, multiply(x, y), h, U)
        assert np.max(np.abs(two_step - one_step)) < 1e-10


def test_schrodinger_is_unitary():
    h = hermite_window(4, 1)
    u = np.linspace(-12, 12, 24001)
    out = schrodinger_apply(1, GroupElement(0.7, -1.1, 0.3), h, u)
    du = u[1] - u[0]
    assert np.sum(np.abs(out) ** 2) * du == pytest.approx(np.sum(h(u) ** 2) * du, abs=1e-12)


def test_matrix_coefficient_at_identity():
    for ell in (0, 3, 10):
        assert matrix_coefficient(5, ell, IDENTITY) == pytest.approx(1.0, abs=1e-14)


def test_matrix_coefficient_pure_translation():
    a = 0.8
    assert matrix_coefficient(1, 0, GroupElement(a, 0, 0)) == pytest.approx(math.exp(-math.pi * a * a / 2), rel=1e-14)


@pytest.mark.parametrize("lam,ell,g", [
    (1, 0, (0.3, -0.4, 0.2)),
    (2, 3, (0.5, 0.25, -0.7)),
    (-3, 2, (-0.4, 0.6, 0.1)),
    (5, 6, (0.2, 0.3, 0.9)),
])
def test_matrix_coefficient_against_quadrature(lam, ell, g):
    g = GroupElement(*g)
    h = hermite_window(ell, lam)
    u = np.linspace(-10, 10, 40001)
    quad = np.sum(h(u) * np.conj(schrodinger_apply(lam, g, h, u))) * (u[1] - u[0])
    exact = matrix_coefficient(lam, ell, g)
    assert abs(quad - exact) <= 1e-8 * max(abs(exact), 1e-3)


def test_matrix_coefficient_modulus_is_laguerre():
    g = GroupElement(0.3, 0.4, 0.9)
    assert abs(matrix_coefficient(2, 4, g)) == pytest.approx(abs(laguerre_fn(4, 2 * math.pi * 0.25)), rel=1e-14)


def test_infinitesimal_center():
    h = hermite_window(2, 3)
    assert np.allclose(infinitesimal_action(3, "S", h, U), 2j * math.pi * 3 * h(U))


def test_infinitesimal_A_on_ground_state():
    h0 = lambda u: hermite_fn(0, u)
    assert np.allclose(infinitesimal_action(1, "A", h0, U), -U * h0(U), atol=1e-10)


def test_infinitesimal_B_matches_derivative_of_group_action():
    lam = 2
    h = hermite_window(1, lam)
    t = 1e-6
    fd = (schrodinger_apply(lam, GroupElement(0, t, 0), h, U) - schrodinger_apply(lam, GroupElement(0, -t, 0), h, U)) / (2 * t)
    assert np.allclose(infinitesimal_action(lam, "B", h, U), fd, atol=1e-6)


def test_commutator_of_A_and_B_is_S():
    # [A, B] = S in the Lie algebra
    lam = 2
    h = hermite_window(2, lam)
    AB = infinitesimal_action(lam, "A", lambda u: infinitesimal_action(lam, "B", h, u), U)
    BA = infinitesimal_action(lam, "B", lambda u: infinitesimal_action(lam, "A", h, u), U)
    assert np.max(np.abs(AB - BA - infinitesimal_action(lam, "S", h, U))) < 1e-6


def test_infinitesimal_rejects_unknown_generator():
    with pytest.raises(ValueError):
        infinitesimal_action(1, "Z", hermite_window(0, 1), U)


def test_central_difference_is_fourth_order():
    assert np.allclose(central_difference(np.sin, U, step=1e-2), np.cos(U), atol=1e-9)
