"""Operator-norm quantities for single-sector packets.

The L4/L2 ratio of ``sum_q gamma_q h_{lam,q,ell}`` is ``(Q(gamma) / ||gamma||^4)^{1/4}``
with ``Q`` the Laguerre-weighted lattice sum.  This module evaluates it for
the indicator windows that witness the ``mu^{1/2}`` growth, bounds it by the
gamma-free weight sum, searches for extremizers on the unit sphere, and
compares everything with the linear (Bernstein-type) ceiling.
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, check_array

from ._validation import check_degree, check_lambda, check_tol
from .basis import CoeffVector
from .key_identity import (
    LatticeSumResult,
    cross_sum_table,
    inner_sum_table,
    laguerre_tail_bound,
    periodized_weight,
    rhs_lattice_sum,
    truncation_radius,
)
from .special import laguerre_fn

__all__ = [
    "WindowSpec",
    "ScalingRow",
    "ScalingReport",
    "ExtremizerResult",
    "LogLogSlope",
    "RatioMaximizer",
    "SLOPE_WINDOW",
    "sector_mu",
    "indicator_window",
    "lemma_lower_bound",
    "packet_ratio",
    "sharpness_scan",
    "upper_bound_sum",
    "upper_bound_constant",
    "objective",
    "objective_gradient",
    "finite_difference_gradient",
    "normalized_gain",
    "maximize_ratio",
    "load_bernstein_config",
    "bernstein_ceiling",
    "calibrate_bernstein",
    "EXTREMIZER_GRID",
]

SLOPE_WINDOW = (0.45, 0.55)
GRAD_TOL = 1e-8

# (lambda, ell) cells on which the ceiling constant is calibrated and checked
EXTREMIZER_GRID = tuple(
    (lam, ell) for lam in (1, 2, 3, 4, 5, 6, 8, 12, 16, 24, 32) for ell in (0, 1, 2)
)


def sector_mu(lam, ell=0):
    """Square root of the eigenvalue ``2 pi |lam| (2 ell + 1)``."""
    return math.sqrt(2 * math.pi * abs(lam) * (2 * ell + 1))


@dataclass
class WindowSpec:
    lam: int
    A: int
    gamma: np.ndarray


def indicator_window(lam, A):
    """Indicator of ``[-A, A]`` on Z/lam, for ``8 A < lam``."""
    lam = check_lambda(lam)
    A = int(A)
    if lam <= 0 or A < 1 or 8 * A >= lam:
        raise ValueError(f"need lambda > 0 and 1 <= A with 8A < lambda, got lambda={lam}, A={A}")
    gamma = np.zeros(lam, dtype=complex)
    gamma[np.arange(-A, A + 1) % lam] = 1.0
    return WindowSpec(lam, A, gamma)


def lemma_lower_bound(lam, A):
    """``exp(-pi A^2/lam) exp(-pi lam/A^2) (2A/pi)^2 (lam + 2A + 1)``; requires ``8 A < lam``."""
    indicator_window(lam, A)  # validates the hypothesis
    return (
        math.exp(-math.pi * A * A / lam)
        * math.exp(-math.pi * lam / (A * A))
        * (2 * A / math.pi) ** 2
        * (lam + 2 * A + 1)
    )


def packet_ratio(gamma, ell=0, tol=1e-12, lam=None):
    """``||f||_4 / ||f||_2`` for the packet with coefficients ``gamma``, with the lattice sum."""
    res = rhs_lattice_sum(gamma, ell, tol, lam=lam)
    g = gamma.gamma if isinstance(gamma, CoeffVector) else np.asarray(gamma, dtype=complex)
    return res.value ** 0.25 / math.sqrt(float(np.vdot(g, g).real)), res


class LogLogSlope(RegressorMixin, BaseEstimator):
    """Least-squares power law ``y = exp(intercept_) * x ** coef_``.

    ``fit`` takes positive ``x`` (one feature) and positive ``y``;
    ``predict`` returns the fitted power law.
    """

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(X, (-1, 1)), y, ensure_min_samples=2)
        if np.any(X <= 0) or np.any(y <= 0):
            raise ValueError("log-log fit needs positive data")
        lx, ly = np.log(X[:, 0]), np.log(y)
        design = np.column_stack([lx, np.ones_like(lx)])
        (slope, icpt), *_ = np.linalg.lstsq(design, ly, rcond=None)
        self.coef_ = float(slope)
        self.intercept_ = float(icpt)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_array(np.reshape(X, (-1, 1)))
        return np.exp(self.intercept_) * X[:, 0] ** self.coef_


@dataclass
class ScalingRow:
    lam: int
    mu: float
    A: int
    ratio: float
    rhs: float
    lemma_bound: float
    tail_bound: float


@dataclass
class ScalingReport:
    rows: list
    fitted_slope: float
    intercept: float
    slope_window: tuple = SLOPE_WINDOW
    skipped: list = field(default_factory=list)

    @property
    def slope_ok(self):
        lo, hi = self.slope_window
        return lo <= self.fitted_slope <= hi

    @property
    def lemma_ok(self):
        return all(r.rhs >= r.lemma_bound for r in self.rows)


def _scan_row(lam, ell, tol):
    A = math.isqrt(lam)
    while 8 * A >= lam:
        A -= 1
    win = indicator_window(lam, A)
    ratio, res = packet_ratio(win.gamma, ell, tol)
    return ScalingRow(lam, sector_mu(lam, ell), A, ratio, res.value, lemma_lower_bound(lam, A), res.tail_bound)


def sharpness_scan(lambda_list, ell=0, tol=1e-12, workers=1):
    """Exact ratios of indicator windows ``A = floor(sqrt lam)`` and their log-log slope in ``mu``.

    ``A`` is lowered if needed to keep ``8 A < lam``; values of ``lam`` with
    no admissible ``A >= 1`` are skipped and listed in ``skipped``.
    """
    ell = check_degree(ell)
    lams = [check_lambda(lam) for lam in lambda_list]
    valid = [lam for lam in lams if lam > 8]
    skipped = [lam for lam in lams if lam <= 8]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda lam: _scan_row(lam, ell, tol), valid))
    else:
        rows = [_scan_row(lam, ell, tol) for lam in valid]
    slope = icpt = float("nan")
    if len(rows) >= 2:
        fit = LogLogSlope().fit([r.mu for r in rows], [r.ratio for r in rows])
        slope, icpt = fit.coef_, fit.intercept_
    return ScalingReport(rows, slope, icpt, SLOPE_WINDOW, skipped)


def upper_bound_sum(lam, ell, tol=1e-12):
    """``sum_{a,b} L_ell(pi (a^2+b^2)/|lam|)^2`` with the same truncation as the lattice sum.

    Points are grouped by ``n = a^2 + b^2`` so each distinct weight is
    evaluated once.  ``tol`` is relative to the origin term, which is 1.
    """
    lam = check_lambda(lam)
    ell = check_degree(ell)
    tol = check_tol(tol)
    radius = truncation_radius(lam, ell, tol)
    top = radius * radius
    counts = np.zeros(top + 1, dtype=np.int64)
    a = np.arange(-radius, radius + 1)
    chunk = max(1, 2_000_000 // a.size)
    for b0 in range(-radius, radius + 1, chunk):
        b = np.arange(b0, min(b0 + chunk, radius + 1))[:, None]
        n = (a * a + b * b).ravel()
        counts += np.bincount(n[n <= top], minlength=top + 1)
    n = np.flatnonzero(counts)
    w = laguerre_fn(ell, math.pi * n / abs(lam))
    value = math.fsum(counts[n] * w * w)
    return LatticeSumResult(value, radius, laguerre_tail_bound(lam, ell, radius))


def upper_bound_constant(lam, ell, tol=1e-12):
    """The weight sum itself (``S = 1``); its fourth root bounds every ratio in the sector."""
    return upper_bound_sum(lam, ell, tol).value


def objective(gamma, W):
    """``Q(gamma) = sum_{x,y} |S[x,y]|^2 W[x,y]`` with a periodised weight table."""
    S = inner_sum_table(np.asarray(gamma, dtype=complex))
    return float(np.sum(np.abs(S) ** 2 * W))


def objective_gradient(gamma, W):
    """``Q`` and its Euclidean gradient in ``(Re gamma, Im gamma)``, packed as a complex vector.

    The gradient is ``2 dQ/d conj(gamma)``, where
    ``dQ/d conj(gamma_p) = sum W [S gamma_{p-y} e(-p x) + conj(S) gamma_{p+y} e((p+y) x)]``
    and ``e(t) = exp(2 pi i t / n)``; both terms are one FFT along ``x``.
    """
    g = np.asarray(gamma, dtype=complex)
    n = g.size
    S = inner_sum_table(g)
    WS = W * S
    Q = float(np.sum((np.conj(S) * WS).real))
    T = np.fft.fft(WS, axis=0)  # [p, y]
    U = n * np.fft.ifft(np.conj(WS), axis=0)  # [p', y]
    p = np.arange(n)[:, None]
    y = np.arange(n)[None, :]
    minus = (p - y) % n
    plus = (p + y) % n
    G = np.sum(T * g[minus], axis=1) + np.sum(U[plus, y] * g[plus], axis=1)
    return Q, 2 * G


def finite_difference_gradient(gamma, W, step=1e-6):
    """Central differences of :func:`objective` in every real coordinate."""
    g = np.asarray(gamma, dtype=complex)
    out = np.empty(g.size, dtype=complex)
    for k in range(g.size):
        for unit, part in ((1.0, "re"), (1j, "im")):
            e = np.zeros(g.size, dtype=complex)
            e[k] = unit * step
            d = (objective(g + e, W) - objective(g - e, W)) / (2 * step)
            if part == "re":
                out[k] = d
            else:
                out[k] += 1j * d
    return out


@dataclass
class ExtremizerResult:
    gamma_star: CoeffVector
    ratio: float
    objective: float
    restarts_used: int
    converged: bool
    best_restart: int
    history: list


def _seeds(lam, restarts, seed):
    n = abs(lam)
    out = []
    if n > 8:
        out.append(_scan_window(n))
    else:
        out.append(np.ones(n, dtype=complex))
    delta = np.zeros(n, dtype=complex)
    delta[0] = 1.0
    out.append(delta)
    i = len(out)
    while len(out) < restarts:
        rng = np.random.default_rng([seed, i])
        out.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        i += 1
    return [s / np.linalg.norm(s) for s in out[:restarts]]


def _scan_window(n):
    A = math.isqrt(n)
    while 8 * A >= n:
        A -= 1
    return indicator_window(n, A).gamma


def normalized_gain(g, d, W, S=None, Q=None):
    """``Q(x)/|x|^4`` at ``x = g + d`` minus its value at ``g``, without cancellation.

    Expands ``S(g + d) - S(g) = S_{gd} + S_{dg} + S_{dd}`` and the norm change
    exactly, so the gain keeps full relative precision even when it is far
    below the rounding level of ``Q`` itself.
    """
    if S is None:
        S = inner_sum_table(g)
    if Q is None:
        Q = float(np.sum(np.abs(S) ** 2 * W))
    delta = cross_sum_table(g, d) + cross_sum_table(d, g) + cross_sum_table(d, d)
    dQ = float(np.sum(W * (2 * (np.conj(S) * delta).real + np.abs(delta) ** 2)))
    n2 = float(np.vdot(g, g).real)
    r = (2 * float(np.vdot(g, d).real) + float(np.vdot(d, d).real)) / n2
    return (dQ - Q * (2 * r + r * r)) / (n2 * n2 * (1 + r) ** 2)


def _scaled_gradient(x, W):
    # gradient of the scale-invariant quotient Q(x) / |x|^4
    Q, G = objective_gradient(x, W)
    n2 = float(np.vdot(x, x).real)
    return G / n2 ** 2 - 4 * Q * x / n2 ** 3


def _real(z):
    return np.concatenate([z.real, z.imag])


def _complex(r):
    n = r.size // 2
    return r[:n] + 1j * r[n:]


def _newton_direction(g, W, h=1e-5):
    """Newton step for ``Q/|x|^4`` on the tangent space orthogonal to ``g`` and ``i g``.

    The Hessian is taken by central differences of the analytic gradient.
    Where the restricted Hessian is not negative definite the unit
    eigenvector of its largest eigenvalue is returned instead, oriented
    uphill; the flag says which case occurred.
    """
    n = g.size
    H = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(n, dtype=complex)
        e[k % n] = h if k < n else 1j * h
        H[:, k] = _real(_scaled_gradient(g + e, W) - _scaled_gradient(g - e, W)) / (2 * h)
    H = 0.5 * (H + H.T)
    fixed = np.column_stack([_real(g), _real(1j * g)])
    basis, _ = np.linalg.qr(np.column_stack([fixed, np.eye(2 * n)]))
    B = basis[:, 2:2 * n]
    evals, evecs = np.linalg.eigh(B.T @ H @ B)
    rhs = B.T @ _real(_scaled_gradient(g, W))
    if evals[-1] >= -1e-12 * max(1.0, abs(evals[0])):
        # not a local max: leave along the most convex direction, uphill
        v = evecs[:, -1]
        return _complex(B @ (v if v @ rhs >= 0 else -v)), True
    step = -evecs @ ((evecs.T @ rhs) / evals)
    return _complex(B @ step), False


def _ascend(gamma, W, max_iters, step_rule, gtol, polish_every=100):
    # the trail is the seed objective plus the accepted gains, each >= 0
    g = gamma / np.linalg.norm(gamma)
    Q, grad = objective_gradient(g, W)
    S = inner_sum_table(g)
    trail = [Q]
    step = 1.0 / max(1.0, Q)
    prev = None
    converged = False
    for it in range(max_iters):
        tangent = grad - np.vdot(g, grad).real * g
        tnorm = float(np.linalg.norm(tangent))
        if tnorm < gtol * max(1.0, Q):
            converged = True
            break
        direction, t, needed_rate = tangent, 2.0 * step, tnorm * tnorm
        if it % polish_every == polish_every - 1:
            direction, escape = _newton_direction(g, W)
            t, needed_rate = (0.5 if escape else 1.0), 0.0
        elif prev is not None:
            # Barzilai-Borwein trial step from the last move, then backtrack
            s_vec, y_vec = g - prev[0], prev[1] - tangent
            sy = abs(np.vdot(s_vec, y_vec).real)
            if sy > 0:
                t = min(max(float(np.vdot(s_vec, s_vec).real) / sy, 1e-12), 1e12)
        while True:
            gain = normalized_gain(g, t * direction, W, S, Q)
            needed = 1e-4 * t * needed_rate if step_rule == "armijo" else 0.0
            if gain >= needed:
                break
            t *= 0.5
            if t < 1e-18:
                return g, Q, trail, False
        if direction is tangent:
            step = t
        prev = (g, tangent)
        g = g + t * direction
        g /= np.linalg.norm(g)
        Q, grad = objective_gradient(g, W)
        S = inner_sum_table(g)
        trail.append(trail[-1] + gain)
    return g, Q, trail, converged


class RatioMaximizer(BaseEstimator):
    """Multi-start projected gradient ascent of the L4/L2 ratio on one sector.

    Restart 0 starts from an indicator window (the flat vector when
    ``|lam| <= 8``), restart 1 from a delta, the rest from complex Gaussians
    drawn with seeds ``(seed, i)``.  Every step is accepted only if the
    objective does not decrease, so each trajectory in ``history_`` is monotone.
    """

    def __init__(self, lam=8, ell=0, restarts=4, max_iters=2000, step_rule="armijo",
                 seed=20240101, tol=1e-12, workers=1):
        self.lam = lam
        self.ell = ell
        self.restarts = restarts
        self.max_iters = max_iters
        self.step_rule = step_rule
        self.seed = seed
        self.tol = tol
        self.workers = workers

    def fit(self, X=None, y=None):
        lam = check_lambda(self.lam)
        ell = check_degree(self.ell)
        if int(self.restarts) < 1:
            raise ValueError("restarts must be at least 1")
        if self.step_rule not in ("armijo", "monotone"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        W, _, _ = periodized_weight(lam, ell, self.tol)
        seeds = _seeds(lam, int(self.restarts), int(self.seed))

        def run(s):
            return _ascend(s, W, int(self.max_iters), self.step_rule, GRAD_TOL)

        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                runs = list(pool.map(run, seeds))
        else:
            runs = [run(s) for s in seeds]
        # max objective, ties to the lowest restart index
        best = max(range(len(runs)), key=lambda i: (runs[i][1], -i))
        g, Q, _, conv = runs[best]
        self.gamma_ = g
        self.objective_ = Q
        self.ratio_ = Q ** 0.25
        self.converged_ = conv
        self.best_restart_ = best
        self.restarts_used_ = len(runs)
        self.history_ = [r[2] for r in runs]
        self.seed_objectives_ = [r[2][0] for r in runs]
        return self

    def result(self):
        check_is_fitted(self)
        return ExtremizerResult(
            CoeffVector(check_lambda(self.lam), self.gamma_), self.ratio_, self.objective_,
            self.restarts_used_, self.converged_, self.best_restart_, self.history_,
        )


def maximize_ratio(lam, ell=0, restarts=4, max_iters=2000, step_rule="armijo", seed=20240101, workers=1):
    """Functional front end to :class:`RatioMaximizer`."""
    est = RatioMaximizer(lam, ell, restarts, max_iters, step_rule, seed, workers=workers)
    return est.fit().result()


def load_bernstein_config():
    text = resources.files("nilrestrict").joinpath("data/bernstein.json").read_text()
    return json.loads(text)


def bernstein_ceiling(mu, config=None):
    """``C_fit * mu`` with the frozen constant from the packaged configuration."""
    mu = float(mu)
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    cfg = load_bernstein_config() if config is None else config
    return cfg["C_fit"] * mu


def calibrate_bernstein(grid=EXTREMIZER_GRID, restarts=4, max_iters=2000, seed=20240101):
    """Recompute ``C_fit = max ratio/mu`` and ``c_fit = min ratio/mu^{1/2}`` over the extremizer grid."""
    rows = []
    for lam, ell in grid:
        res = maximize_ratio(lam, ell, restarts, max_iters, seed=seed)
        rows.append((lam, ell, sector_mu(lam, ell), res.ratio))
    return {
        "version": 1,
        "seed": seed,
        "restarts": restarts,
        "max_iters": max_iters,
        "grid": [[lam, ell] for lam, ell, _, _ in rows],
        "C_fit": max(r / mu for _, _, mu, r in rows),
        "c_fit": min(r / math.sqrt(mu) for _, _, mu, r in rows),
    }
