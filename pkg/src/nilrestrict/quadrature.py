"""Midpoint-rule quadrature on M = Gamma\\H1 and on the torus T^2.

Everything here samples at cell midpoints ``(i + 1/2)/n``.  For the
integrands at hand (trigonometric in ``b`` and ``c``, smooth and periodic in
``a``) this rule is exact or spectrally accurate once the grid exceeds the
bandwidth; every reported value carries a grid-doubling self check.
"""
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_coeffs, check_degree, check_lambda
from .basis import DEFAULT_TOL, TorusIndex, window_radius
from .special import hermite_rescaled

__all__ = [
    "QuadratureResult",
    "Grid2",
    "SectorFunction",
    "midpoints",
    "l2_inner_M",
    "gram_by_quadrature",
    "l4_norm_sector",
    "lp_norm_torus",
    "torus_samples",
]

CONVERGENCE_TOL = 1e-8
GRAM_DOUBLING_TOL = 1e-6


@dataclass
class QuadratureResult:
    value: object
    delta: float
    converged: bool


@dataclass
class Grid2:
    n_a: int
    n_b: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n_a, self.n_b):
            raise ValueError(f"values have shape {self.values.shape}, expected {(self.n_a, self.n_b)}")


def midpoints(n):
    return (np.arange(n) + 0.5) / n


def _next_pow2(x):
    return 1 << max(0, math.ceil(math.log2(max(x, 1))))


def _central_points(bandwidth):
    # midpoint rule in c integrates exp(2 pi i j c) exactly for 0 < |j| < n_c
    return _next_pow2(2 * int(bandwidth) + 1)


def _inner_once(f, g, n, n_c):
    a = midpoints(n)
    b = midpoints(n)
    c = midpoints(n_c)
    B, C = np.meshgrid(b, c, indexing="ij")
    rows = []
    for ai in a:
        A = np.full_like(B, ai)
        rows.append(np.sum(f(A, B, C) * np.conj(g(A, B, C))))
    return complex(np.sum(rows)) / (n * n * n_c)


def l2_inner_M(f, g, grid_n=64, central_bandwidth=0, check=True):
    """``int_M f conj(g)`` on the fundamental domain ``[0,1)^3``.

    ``f`` and ``g`` are callables of broadcast arrays ``(a, b, c)``;
    ``central_bandwidth`` bounds ``|lam|`` for the central Fourier modes they
    carry.  With ``check`` the integral is repeated on the doubled grid.
    """
    n_c = _central_points(central_bandwidth)
    value = _inner_once(f, g, grid_n, n_c)
    if not check:
        return QuadratureResult(value, float("nan"), True)
    fine = _inner_once(f, g, 2 * grid_n, n_c)
    delta = abs(fine - value)
    return QuadratureResult(fine, delta, delta < CONVERGENCE_TOL)


def _gram_once(funcs, n, n_c):
    b = midpoints(n)
    c = midpoints(n_c)
    B, C = np.meshgrid(b, c, indexing="ij")
    B, C = B.ravel(), C.ravel()
    gram = np.zeros((len(funcs), len(funcs)), dtype=complex)
    for ai in midpoints(n):
        A = np.full_like(B, ai)
        samples = np.stack([f(A, B, C) for f in funcs], axis=1)
        gram += samples.T @ np.conj(samples)
    return gram / (n * n * n_c)


def gram_by_quadrature(funcs, grid_n, central_bandwidth, check=True):
    """Matrix ``G[i, j] = (f_i, f_j)_{L2(M)}``; flags if doubling moves any entry by > 1e-6."""
    n_c = _central_points(central_bandwidth)
    gram = _gram_once(funcs, grid_n, n_c)
    if not check:
        return QuadratureResult(gram, float("nan"), True)
    fine = _gram_once(funcs, 2 * grid_n, n_c)
    delta = float(np.max(np.abs(fine - gram)))
    return QuadratureResult(fine, delta, delta <= GRAM_DOUBLING_TOL)


@dataclass
class SectorFunction:
    """Samples of ``f(a, b) = sum_q gamma_q BWZ_{lam,q}(window)(a, b, 0)`` on a midpoint grid.

    ``|f|`` is 1-periodic in both ``a`` and ``b``, which is what the
    two-dimensional reduction of L^p norms on a single sector relies on.
    """

    lam: int
    grid: Grid2
    bandwidth_k: int
    k_min: int
    k_max: int

    @classmethod
    def from_coeffs(cls, lam, gamma, ell=0, n_a=128, n_b=None, window=None, radius=None, tol=DEFAULT_TOL):
        lam = check_lambda(lam)
        gamma = check_coeffs(gamma, lam)
        if window is None:
            ell = check_degree(ell)
            window = lambda u: hermite_rescaled(ell, lam, u)
            radius = window_radius(ell, lam, tol)
        elif radius is None:
            raise ValueError("a custom window needs its support radius")
        # k with |k/lam + a| <= radius for some a in [0, 1)
        lo, hi = sorted((lam * (-1.0 - radius), lam * radius))
        k = np.arange(math.floor(lo), math.ceil(hi) + 1)
        span = int(k[-1] - k[0])
        if n_b is None:
            n_b = _next_pow2(2 * span + 2)
        q = np.arange(abs(lam))
        coef = np.exp(-2j * math.pi * np.outer(k, q) / lam) @ gamma
        a = midpoints(n_a)
        b = midpoints(n_b)
        H = window(k[None, :] / lam + a[:, None])  # (n_a, K)
        E = np.exp(2j * math.pi * np.outer(k, b))  # (K, n_b)
        values = (H * coef[None, :]) @ E * (math.sqrt(abs(lam)) / lam)
        return cls(lam, Grid2(n_a, n_b, values), span, int(k[0]), int(k[-1]))

    def lp_power(self, p):
        """``int |f|^p`` over the unit square, by the midpoint rule."""
        return float(np.mean(np.abs(self.grid.values) ** p))


def l4_norm_sector(lam, gamma=None, ell=0, n_a=128, window=None, radius=None, tol=DEFAULT_TOL, check=True):
    """Fourth power of the L4(M) norm of a single-sector packet.

    ``sum_q gamma_q h_{lam,q,ell}`` (or, with ``window``, ``sum_q gamma_q
    BWZ_{lam,q}(window)``).  The central variable drops out because
    ``|exp(2 pi i lam c)| = 1``, leaving ``int_{[0,1]^2} |f(a,b,0)|^4``.
    A prebuilt :class:`SectorFunction` may be passed in place of ``lam``;
    it is integrated as sampled, without the doubling check.
    """
    if isinstance(lam, SectorFunction):
        return QuadratureResult(lam.lp_power(4), float("nan"), True)
    if gamma is None:
        raise ValueError("coefficients are required unless a SectorFunction is given")
    kwargs = dict(ell=ell, window=window, radius=radius, tol=tol)
    value = SectorFunction.from_coeffs(lam, gamma, n_a=n_a, **kwargs).lp_power(4)
    if not check:
        return QuadratureResult(value, float("nan"), True)
    fine = SectorFunction.from_coeffs(lam, gamma, n_a=2 * n_a, **kwargs).lp_power(4)
    delta = abs(fine - value)
    return QuadratureResult(fine, delta, delta <= CONVERGENCE_TOL * max(1.0, abs(fine)))


def _torus_items(coeffs):
    items = []
    for key, val in coeffs.items():
        if isinstance(key, TorusIndex):
            key = (key.w1, key.w2)
        items.append((int(key[0]), int(key[1]), complex(val)))
    return items


def torus_samples(coeffs, grid_n):
    """``sum_w c_w exp(2 pi i w.(a, b))`` on the midpoint grid, shape ``(n, n)``."""
    items = _torus_items(coeffs)
    x = midpoints(grid_n)
    W1 = np.array([w1 for w1, _, _ in items])
    W2 = np.array([w2 for _, w2, _ in items])
    C = np.array([c for _, _, c in items])
    Ea = np.exp(2j * math.pi * np.outer(x, W1))  # (n, P)
    Eb = np.exp(2j * math.pi * np.outer(W2, x))  # (P, n)
    return (Ea * C[None, :]) @ Eb


def lp_norm_torus(coeffs, p=4, grid_n=None, method="quadrature"):
    """``||sum_w c_w chi_w||_{L^p(T^2)}`` for ``p`` in {2, 4}.

    ``method="plancherel"`` uses the coefficient side only: the l2 norm for
    ``p = 2`` and the correlation sums ``Gamma_rho`` for ``p = 4``.
    """
    if p not in (2, 4):
        raise ValueError("only p = 2 and p = 4 are supported")
    items = _torus_items(coeffs)
    if not items:
        return 0.0
    if method == "plancherel":
        if p == 2:
            return math.sqrt(math.fsum(abs(c) ** 2 for _, _, c in items))
        from .zygmund import correlation_from_items

        table = correlation_from_items(items)
        return math.fsum(abs(v) ** 2 for v in table.values()) ** 0.25
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if grid_n is None:
        span = max(max(abs(w1), abs(w2)) for w1, w2, _ in items)
        # |f|^4 carries frequencies up to 4 * span per axis
        grid_n = _next_pow2(4 * span + 2)
    vals = torus_samples(coeffs, grid_n)
    return float(np.mean(np.abs(vals) ** p)) ** (1.0 / p)
