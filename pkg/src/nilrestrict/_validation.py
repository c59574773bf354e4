"""Input checks shared by the public functions and estimators."""
import numbers

import numpy as np


def check_lambda(lam, allow_zero=False):
    """Return ``lam`` as a Python int, rejecting non-integers (and 0 unless allowed)."""
    if isinstance(lam, bool) or not isinstance(lam, (numbers.Integral, float, np.floating)):
        raise TypeError(f"lambda must be an integer, got {type(lam).__name__}")
    if int(lam) != lam:
        raise ValueError(f"lambda must be an integer, got {lam!r}")
    if not allow_zero and lam == 0:
        raise ValueError("lambda must be nonzero (lambda != 0)")
    return int(lam)


def check_degree(ell):
    if isinstance(ell, bool) or int(ell) != ell or ell < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {ell!r}")
    return int(ell)


def check_tol(tol):
    tol = float(tol)
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    return tol


def check_coeffs(gamma, modulus=None):
    """Coerce coefficients to a 1-D complex array, checking the length if asked."""
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.ndim != 1 or gamma.size == 0:
        raise ValueError("coefficients must be a non-empty 1-D sequence")
    if modulus is not None and gamma.size != abs(modulus):
        raise ValueError(f"expected {abs(modulus)} coefficients, got {gamma.size}")
    return gamma
