"""The L4 lattice-sum identity for single-sector packets, and the discrete STFT.

For ``f = sum_q gamma_q h_{lam,q,ell}`` the fourth power of the L4(M) norm
equals ``sum_{a,b in Z} |S(a,b) w(a,b)|^2`` where ``S`` is a correlation of
the coefficients over Z/lam and ``w(a,b) = L_ell(pi (a^2+b^2)/|lam|)`` is a
Laguerre weight.  This module computes the right-hand side exactly up to a
rigorous truncation bound, and compares it with quadrature of the left side.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import check_coeffs, check_degree, check_lambda, check_tol
from .basis import CoeffVector, window_radius
from .quadrature import l4_norm_sector
from .special import hermite_rescaled, laguerre_fn

__all__ = [
    "STFTMatrix",
    "LatticeSumResult",
    "IdentityCheck",
    "TruncationError",
    "RADIUS_CAP",
    "discrete_stft",
    "inner_sum",
    "inner_sum_table",
    "cross_sum_table",
    "moyal_defect",
    "laguerre_tail_bound",
    "truncation_radius",
    "lattice_weight",
    "rhs_lattice_sum",
    "periodized_weight",
    "window_coefficients",
    "mixed_hermite_window",
    "identity_residual",
]

RADIUS_CAP = 10 ** 6
EPS_FLOOR = 1e-30


class TruncationError(RuntimeError):
    """The requested tolerance needs a lattice radius beyond :data:`RADIUS_CAP`."""


@dataclass
class STFTMatrix:
    """``table[a, b] = V_gamma eta(a, b)`` for ``a, b`` in Z/lam."""

    lam: int
    table: np.ndarray


@dataclass
class LatticeSumResult:
    value: float
    truncation_radius: int
    tail_bound: float


@dataclass
class IdentityCheck:
    residual: float
    lhs: float
    rhs: float
    lhs_delta: float
    lhs_converged: bool
    tail_bound: float


def _as_coeffs(gamma, lam=None):
    if isinstance(gamma, CoeffVector):
        return gamma.lam, gamma.gamma
    arr = check_coeffs(gamma)
    return (check_lambda(lam) if lam is not None else arr.size), check_coeffs(arr, lam)


def discrete_stft(gamma, eta):
    """``V_gamma eta(a, b) = sum_q eta(q) conj(gamma(q - a)) exp(-2 pi i b q / n)``.

    One length-``n`` FFT per shift ``a``; unnormalised forward convention.
    """
    lam_g, g = _as_coeffs(gamma)
    lam_e, e = _as_coeffs(eta)
    if g.size != e.size:
        raise ValueError(f"modulus mismatch: {g.size} vs {e.size}")
    n = g.size
    q = np.arange(n)
    shifts = (q[None, :] - q[:, None]) % n  # [a, q] -> q - a
    prod = e[None, :] * np.conj(g[shifts])
    return STFTMatrix(n, np.fft.fft(prod, axis=1))


def moyal_defect(gamma, eta):
    """Relative gap in ``sum |V_gamma eta|^2 = n ||gamma||^2 ||eta||^2``."""
    V = discrete_stft(gamma, eta)
    _, g = _as_coeffs(gamma)
    _, e = _as_coeffs(eta)
    lhs = float(np.sum(np.abs(V.table) ** 2))
    rhs = V.lam * float(np.vdot(g, g).real) * float(np.vdot(e, e).real)
    return abs(lhs - rhs) / max(rhs, EPS_FLOOR)


def inner_sum(gamma, a, b):
    """``S(a, b) = sum_q gamma_q conj(gamma_{q-b}) exp(2 pi i q a / n)``, by direct summation."""
    _, g = _as_coeffs(gamma)
    n = g.size
    q = np.arange(n)
    return complex(np.sum(g * np.conj(g[(q - b) % n]) * np.exp(2j * math.pi * q * (a % n) / n)))


def _column(g, y):
    # S(., y) over all residues x, via one inverse FFT
    n = g.size
    return n * np.fft.ifft(g * np.conj(np.roll(g, y % n)))


def cross_sum_table(u, v):
    """``T[x, y] = sum_q u_q conj(v_{q-y}) exp(2 pi i q x / n)``; ``S`` is the case ``u = v``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = u.size
    q = np.arange(n)
    prod = u[None, :] * np.conj(v[(q[None, :] - q[:, None]) % n])  # [y, q]
    return (n * np.fft.ifft(prod, axis=1)).T


def inner_sum_table(gamma):
    """Full table ``S[x, y]`` over ``(Z/n)^2``."""
    _, g = _as_coeffs(gamma)
    return cross_sum_table(g, g)


def laguerre_tail_bound(lam, ell, radius):
    """Upper bound on ``sum_{a^2+b^2 > R^2} L_ell(pi (a^2+b^2)/|lam|)^2``.

    Uses ``|L_ell(v) e^{-v/2}| <= (v + ell)^ell e^{-v/2} / ell!`` (from the
    explicit binomial sum), monotone for ``v > ell``, a unit-square
    comparison of the lattice sum with an integral, and
    ``Gamma(s, x) <= x^s e^{-x} / (x - s + 1)`` for ``x > s - 1``.  Returns
    ``inf`` when ``R`` is too small for those steps to apply.
    """
    s0 = radius - math.sqrt(2.0)
    if s0 <= 0:
        return math.inf
    v0 = math.pi * s0 * s0 / abs(lam)
    x = v0 + ell
    if v0 <= ell + 1 or x <= 2 * ell + 1:
        return math.inf
    log_gamma_upper = 2 * ell * math.log(x) - x + math.log(x / (x - 2 * ell))
    log_bound = (
        math.log(abs(lam))
        + math.log1p(math.sqrt(2.0) / (2 * s0))
        + ell
        + log_gamma_upper
        - 2 * math.lgamma(ell + 1)
    )
    return math.exp(log_bound) if log_bound < 700 else math.inf


def truncation_radius(lam, ell, rel_tol):
    """Smallest integer radius whose Laguerre tail bound is below ``rel_tol``.

    Since ``|S| <= ||gamma||^2`` and the origin term alone is ``||gamma||^4``,
    this makes the omitted tail a ``rel_tol`` fraction of the full sum.
    """
    lam = check_lambda(lam)
    ell = check_degree(ell)
    radius = int(math.ceil(math.sqrt(2.0) + math.sqrt(abs(lam) * (ell + 2) / math.pi)))
    while laguerre_tail_bound(lam, ell, radius) > rel_tol:
        radius = max(radius + 1, int(radius * 1.05))
        if radius > RADIUS_CAP:
            raise TruncationError(f"tolerance {rel_tol} unreachable within radius {RADIUS_CAP}")
    return radius


def _rows(radius):
    for b in range(-radius, radius + 1):
        half = math.isqrt(radius * radius - b * b)
        yield b, np.arange(-half, half + 1)


def lattice_weight(lam, ell, a, b):
    """``L_ell(pi (a^2 + b^2) / |lam|)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return laguerre_fn(ell, math.pi * (a * a + b * b) / abs(lam))


def rhs_lattice_sum(gamma, ell, tol=1e-12, lam=None, radius=None):
    """Right side of the identity: ``sum_{a,b} |S(a,b) L_ell(pi (a^2+b^2)/|lam|)|^2``.

    ``S`` is ``|lam|``-periodic in both arguments, so each needed column is
    one inverse FFT, cached by residue.  The truncation radius is chosen so
    the rigorous tail bound is below ``tol`` times the value.
    """
    tol = check_tol(tol)
    lam, g = _as_coeffs(gamma, lam)
    ell = check_degree(ell)
    norm4 = float(np.vdot(g, g).real) ** 2
    if norm4 == 0:
        return LatticeSumResult(0.0, 0, 0.0)
    n = g.size
    if radius is None:
        radius = truncation_radius(lam, ell, tol)
    columns = {}
    partial = []
    for b, a in _rows(radius):
        y = b % n
        if y not in columns:
            columns[y] = np.abs(_column(g, y)) ** 2
        w = lattice_weight(lam, ell, a, b)
        partial.append(float(np.sum(columns[y][a % n] * w * w)))
    tail = norm4 * laguerre_tail_bound(lam, ell, radius)
    return LatticeSumResult(math.fsum(partial), radius, tail)


@lru_cache(maxsize=64)
def _periodized_weight_cached(n, ell, radius):
    W = np.zeros((n, n))
    for b, a in _rows(radius):
        w = laguerre_fn(ell, math.pi * (a * a + b * b) / n)
        np.add.at(W[:, b % n], a % n, w * w)
    W.setflags(write=False)
    return W


def periodized_weight(lam, ell, tol=1e-12):
    """``W[x, y] = sum_{a = x, b = y mod |lam|} L_ell(pi (a^2+b^2)/|lam|)^2``.

    Returns ``(W, radius, tail_per_unit)``; the lattice sum of any
    coefficient vector is then ``sum |S|^2 W`` up to ``tail_per_unit * ||gamma||^4``.
    """
    lam = check_lambda(lam)
    ell = check_degree(ell)
    radius = truncation_radius(lam, ell, tol)
    return _periodized_weight_cached(abs(lam), ell, radius), radius, laguerre_tail_bound(lam, ell, radius)


def mixed_hermite_window(lam, degrees=(2, 5)):
    """Normalised ``sum_j h_{j,lam}`` over distinct degrees, with its support radius."""
    scale = 1.0 / math.sqrt(len(degrees))

    def window(u):
        return scale * sum(hermite_rescaled(d, lam, u) for d in degrees)

    return window, window_radius(max(degrees), lam)


def window_coefficients(window, lam, radius, support, n_u=None):
    """``(h, pi_lam(a/lam, b/lam, 0) h)`` for all ``a^2 + b^2 <= radius^2``.

    Each entry is ``int h(u) conj(h(u + a/lam)) exp(-2 pi i b u) du`` by the
    trapezoid rule on ``[-support, support]``; returned as a dict keyed by
    ``(a, b)``.
    """
    if n_u is None:
        n_u = int(max(512, 16 * radius * support * 2, 64 * support * math.sqrt(abs(lam)) * 4))
    u = np.linspace(-support, support, n_u + 1)
    du = u[1] - u[0]
    wts = np.full(u.shape, du)
    wts[0] = wts[-1] = du / 2
    h0 = window(u)
    out = {}
    for a in range(-radius, radius + 1):
        half = math.isqrt(radius * radius - a * a)
        b = np.arange(-half, half + 1)
        prod = wts * h0 * np.conj(window(u + a / lam))
        vals = np.exp(-2j * math.pi * np.outer(b, u)) @ prod
        for bi, v in zip(b, vals):
            out[(a, int(bi))] = v
    return out


def _rhs_general(g, coeffs):
    n = g.size
    columns = {}
    partial = []
    for (a, b), w in sorted(coeffs.items()):
        y = b % n
        if y not in columns:
            columns[y] = _column(g, y)
        partial.append(abs(columns[y][a % n] * w) ** 2)
    return math.fsum(partial)


def identity_residual(gamma, ell=0, tol=1e-12, grid_n=128, lam=None, general_window=False):
    """Relative gap between quadrature of the L4 norm and the lattice sum.

    With ``general_window`` the packet is built on the normalised window
    ``(h_{2,lam} + h_{5,lam})/sqrt(2)`` and the Laguerre weight is replaced by
    that window's Schrodinger matrix coefficients (computed by quadrature on
    the line); ``ell`` is then ignored.
    """
    lam, g = _as_coeffs(gamma, lam)
    if general_window:
        window, support = mixed_hermite_window(lam)
        lhs = l4_norm_sector(lam, g, n_a=grid_n, window=window, radius=support)
        # window coefficients decay like Laguerre functions of degree <= 5
        radius = truncation_radius(lam, 6, tol)
        coeffs = window_coefficients(window, lam, radius, support)
        rhs = _rhs_general(g, coeffs)
        tail = float(np.vdot(g, g).real) ** 2 * laguerre_tail_bound(lam, 6, radius)
    else:
        lhs = l4_norm_sector(lam, g, ell=ell, n_a=grid_n)
        res = rhs_lattice_sum(g, ell, tol, lam=lam)
        rhs, tail = res.value, res.tail_bound
    residual = abs(lhs.value - rhs) / max(rhs, EPS_FLOOR)
    return IdentityCheck(residual, lhs.value, rhs, lhs.delta, lhs.converged, tail)
