"""Zygmund's L4 estimate for eigenfunctions on the flat torus, by exact lattice arithmetic.

For ``f = sum_{|w|^2 = n} c_w chi_w`` the Plancherel theorem applied to
``|f|^2 = sum_rho Gamma_rho chi_rho`` gives ``||f||_4^4 = sum_rho |Gamma_rho|^2``,
where ``Gamma_rho = sum_{w1 - w2 = rho} c_{w1} conj(c_{w2})``.  Two distinct
points of a circle determine their difference, and a nonzero difference is
realised by at most two ordered pairs, whence the bound ``ratio^4 <= 5``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CirclePoints",
    "CorrelationTable",
    "ZygmundReport",
    "CircleRow",
    "ZYGMUND_BOUND",
    "circle_lattice_points",
    "correlation_table",
    "correlation_from_items",
    "l4_via_plancherel",
    "pair_solution_count",
    "max_pairs_per_difference",
    "zygmund_certificate",
]

ZYGMUND_BOUND = 5.0


@dataclass
class CirclePoints:
    """All integer ``w`` with ``w1^2 + w2^2 = n``, as an ``(r2(n), 2)`` int array."""

    n: int
    points: np.ndarray

    @property
    def count(self):
        return len(self.points)


@dataclass
class CorrelationTable:
    """Sparse ``Gamma_rho`` keyed by integer pairs ``rho``."""

    entries: dict = field(default_factory=dict)

    def __getitem__(self, rho):
        return self.entries.get(tuple(int(r) for r in rho), 0j)


def circle_lattice_points(n):
    """Scan ``w1`` over ``[-sqrt n, sqrt n]`` and keep exact squares."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    top = math.isqrt(n)
    pts = []
    for w1 in range(-top, top + 1):
        rest = n - w1 * w1
        s = math.isqrt(rest)
        if s * s == rest:
            pts.append((w1, -s))
            if s:
                pts.append((w1, s))
    return CirclePoints(n, np.array(pts, dtype=np.int64).reshape(-1, 2))


def _difference_groups(points):
    # group ordered pairs (i, j) by w_i - w_j; returns unique diffs and pair labels
    diffs = (points[:, None, :] - points[None, :, :]).reshape(-1, 2)
    uniq, inverse = np.unique(diffs, axis=0, return_inverse=True)
    return uniq, inverse.ravel()


def _grouped(c, uniq, inverse):
    prod = (c[:, None] * np.conj(c[None, :])).ravel()
    m = len(uniq)
    return np.bincount(inverse, prod.real, m) + 1j * np.bincount(inverse, prod.imag, m)


def correlation_table(points, c):
    """``Gamma_rho = sum_{w1 - w2 = rho} c_{w1} conj(c_{w2})`` for every occurring ``rho``."""
    pts = points.points if isinstance(points, CirclePoints) else np.asarray(points, dtype=np.int64)
    c = np.asarray(c, dtype=complex)
    if c.shape != (len(pts),):
        raise ValueError(f"expected {len(pts)} coefficients, got shape {c.shape}")
    if len(pts) == 0:
        return CorrelationTable({})
    uniq, inverse = _difference_groups(pts)
    vals = _grouped(c, uniq, inverse)
    return CorrelationTable({(int(r[0]), int(r[1])): complex(v) for r, v in zip(uniq, vals)})


def correlation_from_items(items):
    """Correlation table from ``(w1, w2, c)`` triples; the points need not share a circle."""
    pts = np.array([(w1, w2) for w1, w2, _ in items], dtype=np.int64).reshape(-1, 2)
    return correlation_table(pts, [c for _, _, c in items]).entries


def l4_via_plancherel(table):
    """``||sum c_w chi_w||_4^4 = sum_rho |Gamma_rho|^2``."""
    entries = table.entries if isinstance(table, CorrelationTable) else table
    return math.fsum(abs(v) ** 2 for v in entries.values())


def pair_solution_count(rho, r_prime, r_prime_sq=None):
    """Number of real pairs ``(w1, w2)`` with ``|w1| = |w2| = r'`` and ``w1 - w2 = rho``.

    Writing ``w1 = rho/2 + t rho_perp/|rho|`` forces ``t^2 = r'^2 - |rho|^2/4``:
    two solutions when positive, one when zero.  Pass the integer
    ``r_prime_sq`` for an exact decision at tangency.
    """
    r1, r2 = int(rho[0]), int(rho[1])
    if r1 == 0 and r2 == 0:
        raise ValueError("rho must be nonzero")
    rho_sq = r1 * r1 + r2 * r2
    if r_prime_sq is not None:
        disc = 4 * int(r_prime_sq) - rho_sq
    else:
        if r_prime < 0:
            raise ValueError("r_prime must be nonnegative")
        disc = 4.0 * r_prime * r_prime - rho_sq
        if abs(disc) <= 1e-12 * rho_sq:
            disc = 0
    return 2 if disc > 0 else (1 if disc == 0 else 0)


def max_pairs_per_difference(n):
    """Largest number of ordered pairs on circle ``n`` sharing one nonzero difference."""
    pts = circle_lattice_points(n).points
    if len(pts) < 2:
        return 0
    uniq, inverse = _difference_groups(pts)
    counts = np.bincount(inverse, minlength=len(uniq))
    nonzero = np.any(uniq != 0, axis=1)
    return int(counts[nonzero].max()) if nonzero.any() else 0


@dataclass
class CircleRow:
    n: int
    r2: int
    max_ratio4: float
    max_offdiag_ratio: float
    max_pairs: object  # int, or None above the pair-check range


@dataclass
class ZygmundReport:
    n_max: int
    trials: int
    seed: int
    circles_tested: int
    max_ratio4: float
    argmax_n: int
    violations: int
    max_offdiag_ratio: float
    offdiag_violations: int
    pair_check_max: int
    max_pairs: int
    pair_violations: int
    rows: list = field(default_factory=list)

    @property
    def passed(self):
        return self.violations == 0 and self.offdiag_violations == 0 and self.pair_violations == 0


def _circle_stats(n, trials, seed):
    pts = circle_lattice_points(n).points
    k = len(pts)
    if k == 0:
        return None
    uniq, inverse = _difference_groups(pts)
    zero = int(np.flatnonzero(np.all(uniq == 0, axis=1))[0])
    rng = np.random.default_rng([seed, n])
    best = best_off = 0.0
    bad = bad_off = 0
    for _ in range(trials):
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        sq = np.abs(_grouped(c, uniq, inverse)) ** 2
        norm4 = float(np.sum(np.abs(c) ** 2)) ** 2
        total = math.fsum(sq) / norm4
        off = float(math.fsum(sq) - sq[zero]) / norm4
        best, best_off = max(best, total), max(best_off, off)
        bad += total > ZYGMUND_BOUND
        bad_off += off > ZYGMUND_BOUND - 1
    return best, best_off, bad, bad_off, k


def zygmund_certificate(n_max, trials=50, seed=20240101, pair_check_max=2500, workers=1):
    """Check ``ratio^4 <= 5`` on every circle ``n <= n_max`` with random complex coefficients.

    Coefficients have unit-normal real and imaginary parts from a generator
    seeded by ``(seed, n)``, so results do not depend on ``workers``.  The
    off-diagonal part ``sum_{rho != 0} |Gamma_rho|^2 <= 4 ||c||^4`` is checked
    separately, and the at-most-two-pairs property exhaustively for
    ``n <= pair_check_max``.
    """
    n_max = int(n_max)
    if n_max < 1 or int(trials) < 1:
        raise ValueError("n_max and trials must be positive")
    ns = range(1, n_max + 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            stats = list(pool.map(lambda n: _circle_stats(n, trials, seed), ns))
    else:
        stats = [_circle_stats(n, trials, seed) for n in ns]
    tested = best = best_off = 0
    argmax = 0
    bad = bad_off = 0
    pair_top = min(n_max, int(pair_check_max))
    rows = []
    for n, st in zip(ns, stats):
        if st is None:
            continue
        rows.append(CircleRow(n, st[4], st[0], st[1], max_pairs_per_difference(n) if n <= pair_top else None))
        tested += 1
        if st[0] > best:
            best, argmax = st[0], n
        best_off = max(best_off, st[1])
        bad += st[2]
        bad_off += st[3]
    # circles with no lattice points have no pairs at all
    pair_counts = [r.max_pairs for r in rows if r.max_pairs is not None]
    return ZygmundReport(
        n_max, int(trials), int(seed), tested, float(best), argmax, int(bad),
        float(best_off), int(bad_off), pair_top, max(pair_counts, default=0),
        sum(p > 2 for p in pair_counts), rows,
    )
