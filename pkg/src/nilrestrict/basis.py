"""Explicit eigenbasis of the sub-Laplacian on the Heisenberg nilmanifold.

Two families: torus characters ``chi_w(a,b,c) = exp(2 pi i w.(a,b))`` and the
sector functions ``h_{lam,q,ell}``, each the BWZ transform of a rescaled
Hermite function.  Points are given either as a :class:`GroupElement` or as a
tuple of broadcastable arrays ``(a, b, c)``.
"""
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_degree, check_lambda, check_tol
from .group import GroupElement
from .special import hermite_rescaled, hermite_rescaled_deriv

__all__ = [
    "SectorIndex",
    "TorusIndex",
    "SpectralLine",
    "CoeffVector",
    "DEFAULT_TOL",
    "bwz_eval",
    "eval_chi",
    "eval_h",
    "eval_g_ds",
    "eigenvalue",
    "spectral_key",
    "apply_sublaplacian",
    "covariance_check",
    "gram_matrix",
    "enumerate_spectrum",
    "spectral_key_for_mu",
    "project_pr_lambda",
    "project_pi_mu",
    "coeff_norm",
    "window_radius",
]

DEFAULT_TOL = 1e-13
_CHUNK = 8192


@dataclass(frozen=True)
class SectorIndex:
    """Label ``(lam, q, ell)`` with ``q`` stored in ``[0, |lam|)``."""

    lam: int
    q: int
    ell: int

    def __post_init__(self):
        lam = check_lambda(self.lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "q", int(self.q) % abs(lam))
        object.__setattr__(self, "ell", check_degree(self.ell))

    @property
    def central_frequency(self):
        return self.lam


@dataclass(frozen=True)
class TorusIndex:
    w1: int
    w2: int

    def __post_init__(self):
        object.__setattr__(self, "w1", int(self.w1))
        object.__setattr__(self, "w2", int(self.w2))

    @property
    def central_frequency(self):
        return 0

    @property
    def norm_sq(self):
        return self.w1 * self.w1 + self.w2 * self.w2


@dataclass
class CoeffVector:
    lam: int
    gamma: np.ndarray

    def __post_init__(self):
        self.lam = check_lambda(self.lam)
        self.gamma = np.asarray(self.gamma, dtype=complex)
        if self.gamma.shape != (abs(self.lam),):
            raise ValueError(f"need exactly {abs(self.lam)} coefficients, got {self.gamma.shape}")


@dataclass
class SpectralLine:
    """One eigenvalue ``mu`` of sqrt(L_M), with exact integer key.

    ``kind == "sector"`` means ``mu^2 = 2 pi m``; ``kind == "torus"`` means
    ``mu^2 = 4 pi^2 n``.
    """

    mu: float
    kind: str
    key: int
    lambda_sectors: list = field(default_factory=list)
    torus_points: list = field(default_factory=list)

    @property
    def multiplicity(self):
        return sum(abs(lam) for lam, _ in self.lambda_sectors) + len(self.torus_points)


def _coords(p):
    if isinstance(p, GroupElement):
        return np.float64(p.a), np.float64(p.b), np.float64(p.c)
    a, b, c = (np.asarray(t, dtype=float) for t in p)
    return np.broadcast_arrays(a, b, c)


def window_radius(ell, lam, tol=DEFAULT_TOL):
    """Half-width in ``u`` outside of which ``h_{ell,lam}`` is below ``tol``."""
    t_max = math.sqrt(2 * ell + 1) + math.sqrt(2 * math.log(1.0 / min(tol, 0.1))) + 3.0
    return t_max / math.sqrt(2 * math.pi * abs(lam))


def _k_range(lam, a_min, a_max, radius):
    # |k/lam + a| <= radius  <=>  k/lam in [-a - radius, -a + radius]
    ends = [lam * (-a_min - radius), lam * (-a_max - radius), lam * (-a_min + radius), lam * (-a_max + radius)]
    return np.arange(math.floor(min(ends)), math.ceil(max(ends)) + 1)


def bwz_eval(lam, q, window, radius, p, window_coeff=None):
    """BWZ transform of ``window`` at points ``p``.

    ``sqrt|lam|/lam * sum_k exp(-2 pi i q k/lam) exp(2 pi i (lam c + k b)) window(k/lam + a)``
    with ``k`` restricted to ``|k/lam + a| <= radius``.  ``window_coeff``, if
    given, replaces ``exp(-2 pi i q k / lam)`` by an arbitrary ``lam``-periodic
    table indexed by ``k mod |lam|`` (used for packets ``sum_q gamma_q h_q``).
    """
    lam = check_lambda(lam)
    a, b, c = _coords(p)
    shape = a.shape
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    out = np.zeros(a.size, dtype=complex)
    pref = math.sqrt(abs(lam)) / lam
    for start in range(0, a.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        aa, bb, cc = a[sl], b[sl], c[sl]
        if aa.size == 0:
            continue
        k = _k_range(lam, aa.min(), aa.max(), radius)
        if window_coeff is None:
            coef = np.exp(-2j * math.pi * q * k / lam)
        else:
            coef = np.asarray(window_coeff)[k % abs(lam)]
        u = k[None, :] / lam + aa[:, None]
        terms = window(u) * np.exp(2j * math.pi * k[None, :] * bb[:, None])
        out[sl] = (terms @ coef) * np.exp(2j * math.pi * lam * cc)
    out *= pref
    return out.reshape(shape) if shape else out[0]


def eval_chi(omega, p):
    a, b, _ = _coords(p)
    return np.exp(2j * math.pi * (omega.w1 * a + omega.w2 * b))


def eval_h(idx, p, tol=DEFAULT_TOL):
    """Truncated BWZ series for ``h_{lam,q,ell}``; omitted tail below ``tol``."""
    tol = check_tol(tol)
    window = lambda u: hermite_rescaled(idx.ell, idx.lam, u)
    return bwz_eval(idx.lam, idx.q, window, window_radius(idx.ell, idx.lam, tol), p)


def eval_g_ds(lam, r, ell, p, tol=DEFAULT_TOL):
    """Alternative eigenfunction ``g_{lam,r,ell}`` (periodised in steps of 1 in ``a``)."""
    lam = check_lambda(lam)
    r = int(r) % abs(lam)
    a, b, c = _coords(p)
    shape = a.shape
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    radius = window_radius(ell, lam, tol)
    shift = a + r / lam
    k1 = np.arange(math.floor(-shift.max() - radius), math.ceil(-shift.min() + radius) + 1)
    u = shift[:, None] + k1[None, :]
    terms = hermite_rescaled(ell, lam, u) * np.exp(2j * math.pi * lam * k1[None, :] * b[:, None])
    out = terms.sum(axis=1) * np.exp(2j * math.pi * (lam * c + r * b))
    return out.reshape(shape) if shape else out[0]


def eigenvalue(idx):
    """Sub-Laplacian eigenvalue: ``2 pi |lam| (2 ell + 1)`` or ``4 pi^2 |w|^2``."""
    if isinstance(idx, TorusIndex):
        return 4 * math.pi ** 2 * idx.norm_sq
    return 2 * math.pi * abs(idx.lam) * (2 * idx.ell + 1)


def spectral_key(idx):
    """Exact integer label of the eigenvalue: ``("sector", m)`` or ``("torus", n)``."""
    if isinstance(idx, TorusIndex):
        return ("torus", idx.norm_sq)
    return ("sector", abs(idx.lam) * (2 * idx.ell + 1))


def apply_sublaplacian(idx, p, tol=DEFAULT_TOL):
    """``L_M = -(A^2 + B^2)`` applied to a basis function, evaluated at ``p``.

    For sector functions each series term is differentiated analytically:
    ``A = d/da`` hits the Hermite factor (second derivative from the ladder
    relations) and ``B = d/db + a d/dc`` multiplies the term by
    ``2 pi i lam (k/lam + a)``.
    """
    tol = check_tol(tol)
    if isinstance(idx, TorusIndex):
        return 4 * math.pi ** 2 * idx.norm_sq * eval_chi(idx, p)
    lam, ell = idx.lam, idx.ell

    def window(u):
        h = hermite_rescaled(ell, lam, u)
        h2 = hermite_rescaled_deriv(ell, lam, u, order=2)
        return -h2 + (2 * math.pi * lam * u) ** 2 * h

    return bwz_eval(lam, idx.q, window, window_radius(ell, lam, tol), p)


def covariance_check(idx, q_shift, p, tol=DEFAULT_TOL):
    """Deviations in the two translation rules of the BWZ transform.

    Right translation by ``(q/lam, 0, 0)`` multiplies by
    ``exp(-2 pi i q b) exp(2 pi i q0 q / lam)``; right translation by
    ``(0, q/lam, 0)`` multiplies by ``exp(2 pi i q a)`` and moves ``q0`` to
    ``q0 - q``.  Returns the two maximal absolute deviations.
    """
    lam, q0, q = idx.lam, idx.q, int(q_shift)
    a, b, c = _coords(p)
    base = eval_h(idx, (a, b, c), tol)

    shifted_a = eval_h(idx, (a + q / lam, b, c), tol)
    expect_a = np.exp(-2j * math.pi * q * b) * np.exp(2j * math.pi * q0 * q / lam) * base
    # (a,b,c)(0,q/lam,0) = (a, b + q/lam, c + a q/lam)
    shifted_b = eval_h(idx, (a, b + q / lam, c + a * q / lam), tol)
    other = eval_h(SectorIndex(lam, q0 - q, idx.ell), (a, b, c), tol)
    expect_b = np.exp(2j * math.pi * q * a) * other
    return float(np.max(np.abs(shifted_a - expect_a))), float(np.max(np.abs(shifted_b - expect_b)))


def _evaluator(idx, tol):
    if isinstance(idx, TorusIndex):
        return lambda a, b, c: eval_chi(idx, (a, b, c))
    return lambda a, b, c: eval_h(idx, (a, b, c), tol)


def gram_matrix(indices, grid_n=64, tol=DEFAULT_TOL, check=True):
    """L2(M) Gram matrix of basis functions by tensor midpoint quadrature.

    Returns a :class:`~nilrestrict.quadrature.QuadratureResult` whose value is
    the matrix; ``converged`` is False when doubling ``grid_n`` moves an
    entry by more than 1e-6.
    """
    from .quadrature import gram_by_quadrature

    funcs = [_evaluator(idx, tol) for idx in indices]
    bandwidth = max(abs(idx.central_frequency) for idx in indices)
    return gram_by_quadrature(funcs, grid_n, bandwidth, check=check)


def _sector_multiplicity_pairs(m):
    pairs = []
    for d in range(1, m + 1):
        if m % d == 0 and (m // d) % 2 == 1:
            ell = (m // d - 1) // 2
            pairs.extend([(d, ell), (-d, ell)])
    return pairs


def enumerate_spectrum(mu_max):
    """All positive eigenvalues ``mu <= mu_max`` of sqrt(L_M), sorted by ``mu``."""
    if not mu_max > 0:
        raise ValueError("mu_max must be positive")
    lines = []
    m_max = int(math.floor(mu_max ** 2 / (2 * math.pi) * (1 + 1e-12)))
    for m in range(1, m_max + 1):
        mu = math.sqrt(2 * math.pi * m)
        if mu <= mu_max * (1 + 1e-12):
            lines.append(SpectralLine(mu, "sector", m, lambda_sectors=_sector_multiplicity_pairs(m)))
    r_max = int(math.floor(mu_max / (2 * math.pi) * (1 + 1e-12)))
    shells = defaultdict(list)
    for w1 in range(-r_max, r_max + 1):
        for w2 in range(-r_max, r_max + 1):
            n = w1 * w1 + w2 * w2
            if 0 < n and 2 * math.pi * math.sqrt(n) <= mu_max * (1 + 1e-12):
                shells[n].append((w1, w2))
    for n, pts in shells.items():
        lines.append(SpectralLine(2 * math.pi * math.sqrt(n), "torus", n, torus_points=sorted(pts)))
    lines.sort(key=lambda line: (line.mu, line.kind))
    return lines


def spectral_key_for_mu(mu, rel=1e-9):
    """Exact eigenvalue label matching a floating ``mu``, or ``None`` if off-spectrum."""
    if isinstance(mu, SpectralLine):
        return (mu.kind, mu.key)
    sq = float(mu) ** 2
    m = round(sq / (2 * math.pi))
    if m >= 1 and abs(2 * math.pi * m - sq) <= rel * sq:
        return ("sector", m)
    n = round(sq / (4 * math.pi ** 2))
    if n >= 1 and abs(4 * math.pi ** 2 * n - sq) <= rel * sq:
        return ("torus", n)
    return None


def project_pr_lambda(coeffs, lam):
    """Keep the terms with central frequency ``lam`` (torus terms have frequency 0)."""
    lam = int(lam)
    return {idx: val for idx, val in coeffs.items() if idx.central_frequency == lam}


def project_pi_mu(coeffs, mu):
    """Keep the terms on the eigenvalue ``mu`` (a float or a :class:`SpectralLine`)."""
    key = spectral_key_for_mu(mu)
    if key is None:
        return {}
    return {idx: val for idx, val in coeffs.items() if spectral_key(idx) == key}


def coeff_norm(coeffs):
    """L2(M) norm of an expansion, by orthonormality of the basis."""
    return math.sqrt(math.fsum(abs(v) ** 2 for v in coeffs.values()))
