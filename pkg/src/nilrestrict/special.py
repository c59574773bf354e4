"""Hermite and Laguerre functions by stable recurrences.

Both families are evaluated by carrying the polynomial recurrence on a
rescaled copy and re-attaching the Gaussian factor in log space at the end,
so degrees in the thousands and large arguments stay in floating range.
"""
import math

import numpy as np

from ._validation import check_degree, check_lambda

__all__ = [
    "hermite_fn",
    "hermite_all",
    "hermite_deriv",
    "hermite_rescaled",
    "hermite_rescaled_deriv",
    "hermite_direct",
    "laguerre_fn",
    "laguerre_all",
    "laguerre_poly_direct",
    "hermite_laguerre_residual",
    "oscillator_residual",
    "fit_laguerre_constant",
]

# exact power of two, so rescaling introduces no rounding
_SCALE_EXP = 600
_SCALE = 2.0 ** _SCALE_EXP
_LOG_SCALE = _SCALE_EXP * math.log(2.0)
_BIG = 2.0 ** 700

# |sqrt(2 pi |lambda|) u| beyond this (plus the turning point) is returned as 0
RESCALED_CUTOFF = 38.0


def _attach(p, log_scale, log_gauss):
    """Return p * exp(log_scale + log_gauss) without overflow or 0*inf."""
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(p)) + log_scale + log_gauss
    out = np.sign(p) * np.exp(np.minimum(mag, 700.0))
    return np.where(p == 0, 0.0, out)


def hermite_all(ell_max, u):
    """Hermite functions ``h_0 .. h_{ell_max}`` at ``u``.

    Returns an array of shape ``(ell_max + 1,) + np.shape(u)``.
    """
    ell_max = check_degree(ell_max)
    u = np.asarray(u, dtype=float)
    out = np.empty((ell_max + 1,) + u.shape)
    log_gauss = -0.5 * u * u
    log_scale = np.full(u.shape, -0.25 * math.log(math.pi))
    prev = np.zeros(u.shape)
    cur = np.ones(u.shape)
    out[0] = _attach(cur, log_scale, log_gauss)
    for m in range(ell_max):
        nxt = u * math.sqrt(2.0 / (m + 1)) * cur - math.sqrt(m / (m + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            cur = np.where(big, cur / _SCALE, cur)
            prev = np.where(big, prev / _SCALE, prev)
            log_scale = log_scale + np.where(big, _LOG_SCALE, 0.0)
        out[m + 1] = _attach(cur, log_scale, log_gauss)
    return out


def hermite_fn(ell, u):
    """L2-normalised Hermite function ``h_ell(u)``."""
    ell = check_degree(ell)
    return hermite_all(ell, u)[ell]


def hermite_deriv(ell, u, order=1):
    """Derivative of ``h_ell`` through the ladder relations.

    The first derivative is ``sqrt(l/2) h_{l-1} - sqrt((l+1)/2) h_{l+1}``;
    ``order=2`` applies the ladder twice and never uses the oscillator
    equation, so it can be checked against it.
    """
    ell = check_degree(ell)
    h = hermite_all(ell + order, u)

    def get(m):
        return h[m] if m >= 0 else np.zeros_like(h[0])

    if order == 0:
        return h[ell]
    if order == 1:
        return math.sqrt(ell / 2) * get(ell - 1) - math.sqrt((ell + 1) / 2) * get(ell + 1)
    if order == 2:
        return (
            0.5 * math.sqrt(ell * (ell - 1)) * get(ell - 2)
            - 0.5 * (2 * ell + 1) * h[ell]
            + 0.5 * math.sqrt((ell + 1) * (ell + 2)) * h[ell + 2]
        )
    raise ValueError("order must be 0, 1 or 2")


def hermite_direct(ell, u):
    """Closed-form ``h_ell`` from the explicit Hermite polynomial (small degree oracle)."""
    ell = check_degree(ell)
    u = np.asarray(u, dtype=float)
    # H_l(u) = l! sum_m (-1)^m (2u)^{l-2m} / (m! (l-2m)!)
    poly = np.zeros_like(u)
    for m in range(ell // 2 + 1):
        coef = (-1) ** m * math.factorial(ell) / (math.factorial(m) * math.factorial(ell - 2 * m))
        poly = poly + coef * (2 * u) ** (ell - 2 * m)
    norm = math.sqrt(math.sqrt(math.pi) * 2.0 ** ell * math.factorial(ell))
    return poly * np.exp(-0.5 * u * u) / norm


def hermite_rescaled(ell, lam, u):
    """``h_{ell,lam}(u) = (2 pi |lam|)^{1/4} h_ell(sqrt(2 pi |lam|) u)``."""
    lam = check_lambda(lam)
    ell = check_degree(ell)
    s = math.sqrt(2 * math.pi * abs(lam))
    t = s * np.asarray(u, dtype=float)
    val = math.sqrt(s) * hermite_fn(ell, t)
    return np.where(np.abs(t) > RESCALED_CUTOFF + math.sqrt(2 * ell + 1), 0.0, val)


def hermite_rescaled_deriv(ell, lam, u, order=1):
    """``d^order/du^order`` of :func:`hermite_rescaled`, via the ladder relations."""
    lam = check_lambda(lam)
    s = math.sqrt(2 * math.pi * abs(lam))
    t = s * np.asarray(u, dtype=float)
    val = math.sqrt(s) * s ** order * hermite_deriv(ell, t, order)
    return np.where(np.abs(t) > RESCALED_CUTOFF + math.sqrt(2 * ell + 1), 0.0, val)


def laguerre_all(ell_max, v):
    """Laguerre functions ``L_k(v) exp(-v/2)`` for ``k = 0 .. ell_max``."""
    ell_max = check_degree(ell_max)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("Laguerre functions are evaluated on v >= 0 only")
    out = np.empty((ell_max + 1,) + v.shape)
    log_gauss = -0.5 * v
    log_scale = np.zeros(v.shape)
    prev = np.zeros(v.shape)
    cur = np.ones(v.shape)
    out[0] = _attach(cur, log_scale, log_gauss)
    for m in range(ell_max):
        nxt = ((2 * m + 1 - v) * cur - m * prev) / (m + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            cur = np.where(big, cur / _SCALE, cur)
            prev = np.where(big, prev / _SCALE, prev)
            log_scale = log_scale + np.where(big, _LOG_SCALE, 0.0)
        out[m + 1] = _attach(cur, log_scale, log_gauss)
    return out


def laguerre_fn(ell, v):
    """Laguerre function of type 0, ``L_ell(v) exp(-v/2)``, for ``v >= 0``."""
    ell = check_degree(ell)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("Laguerre functions are evaluated on v >= 0 only")
    if ell == 0:
        return np.exp(-0.5 * v)
    # two-row recurrence; avoids storing every degree
    log_gauss = -0.5 * v
    log_scale = np.zeros(v.shape)
    prev = np.ones(v.shape)
    cur = 1.0 - v
    for m in range(1, ell):
        nxt = ((2 * m + 1 - v) * cur - m * prev) / (m + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            cur = np.where(big, cur / _SCALE, cur)
            prev = np.where(big, prev / _SCALE, prev)
            log_scale = log_scale + np.where(big, _LOG_SCALE, 0.0)
    return _attach(cur, log_scale, log_gauss)


def laguerre_poly_direct(ell, v):
    """Explicit binomial sum for ``L_ell(v)`` (the polynomial, no exponential)."""
    ell = check_degree(ell)
    v = np.asarray(v, dtype=float)
    total = np.zeros_like(v)
    for k in range(ell + 1):
        total = total + (-1) ** k * math.comb(ell, k) * v ** k / math.factorial(k)
    return total


def _rel_half_width(ell):
    return 2.0 * (6.0 + math.sqrt(2 * ell + 1))


def hermite_laguerre_residual(ell, x, y, quad_points=400, half_width=None):
    """Modulus of the gap in the Hermite-to-Laguerre Fourier identity.

    Compares ``laguerre_fn(ell, (x^2 + y^2)/2)`` with the integral of
    ``exp(i x xi) h_ell(xi + y/2) h_ell(xi - y/2)`` computed by a uniform
    trapezoid on ``[-half_width, half_width]``.
    """
    if half_width is None:
        half_width = _rel_half_width(ell)
    xi = np.linspace(-half_width, half_width, int(quad_points) + 1)
    dxi = xi[1] - xi[0]
    integrand = np.exp(1j * x * xi) * hermite_fn(ell, xi + y / 2) * hermite_fn(ell, xi - y / 2)
    weights = np.full(xi.shape, dxi)
    weights[0] = weights[-1] = dxi / 2
    integral = np.sum(weights * integrand)
    return float(abs(laguerre_fn(ell, (x * x + y * y) / 2) - integral))


def oscillator_residual(ell, u):
    """Pointwise ``|-h'' + u^2 h - (2 ell + 1) h|`` with ``h''`` from the ladder."""
    u = np.asarray(u, dtype=float)
    h = hermite_fn(ell, u)
    h2 = hermite_deriv(ell, u, order=2)
    return np.abs(-h2 + u * u * h - (2 * ell + 1) * h)


def fit_laguerre_constant(ell_max=500, v_min=1e-3, v_max=1e4, n_v=400):
    """Empirical constant in ``|L_ell(v)| <= C (2 ell + 1) / v``.

    Scans degrees ``0..ell_max`` against a log grid of ``v`` and returns
    ``(C, sup_abs)`` where ``sup_abs`` is the largest ``|L_ell(v)|`` seen.
    """
    v = np.geomspace(v_min, v_max, n_v)
    table = laguerre_all(ell_max, v)
    degrees = np.arange(ell_max + 1)[:, None]
    scaled = np.abs(table) * v[None, :] / (2 * degrees + 1)
    return float(scaled.max()), float(np.abs(table).max())
