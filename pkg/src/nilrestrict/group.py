"""The Heisenberg group H1 = R^3 with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')."""
import math
from dataclasses import dataclass

import numpy as np

from .special import hermite_rescaled, laguerre_fn
from ._validation import check_lambda, check_degree

__all__ = [
    "GroupElement",
    "ReducedPoint",
    "IDENTITY",
    "multiply",
    "inverse",
    "reduce_mod_gamma",
    "schrodinger_operator",
    "schrodinger_apply",
    "matrix_coefficient",
    "infinitesimal_action",
    "central_difference",
]


@dataclass(frozen=True)
class GroupElement:
    a: float
    b: float
    c: float

    def __mul__(self, other):
        return multiply(self, other)

    def as_tuple(self):
        return (self.a, self.b, self.c)

    def is_integral(self):
        return all(float(x).is_integer() for x in self.as_tuple())


IDENTITY = GroupElement(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ReducedPoint:
    """``gamma * rep == x`` with ``rep`` in the unit cube and ``gamma`` integral."""

    rep: GroupElement
    gamma: GroupElement


def multiply(x, y):
    return GroupElement(x.a + y.a, x.b + y.b, x.c + y.c + x.a * y.b)


def inverse(x):
    return GroupElement(-x.a, -x.b, -x.c + x.a * x.b)


def _frac(t):
    n = math.floor(t)
    r = t - n
    if r >= 1.0:  # t a hair below an integer
        n, r = n + 1, 0.0
    return n, r


def reduce_mod_gamma(x):
    """Left-reduce ``x`` into the fundamental domain ``[0,1)^3``.

    The integer part of ``a`` is taken first, then of ``b``; the central
    coordinate absorbs the twist ``m * b'`` from the group law.
    """
    m, a_rep = _frac(x.a)
    n, b_rep = _frac(x.b)
    p, c_rep = _frac(x.c - m * b_rep)
    return ReducedPoint(
        rep=GroupElement(a_rep, b_rep, c_rep),
        gamma=GroupElement(float(m), float(n), float(p)),
    )


def schrodinger_operator(lam, g):
    """Return ``pi_lam(g)`` as a map on callables ``h: R -> C``.

    ``pi_lam(a,b,c) h(u) = exp(2 pi i lam (c + u b)) h(u + a)``.
    """
    lam = check_lambda(lam)

    def apply(h):
        def out(u):
            u = np.asarray(u, dtype=float)
            return np.exp(2j * math.pi * lam * (g.c + u * g.b)) * h(u + g.a)

        return out

    return apply


def schrodinger_apply(lam, g, h, u):
    """Samples of ``pi_lam(g) h`` on the grid ``u``."""
    return schrodinger_operator(lam, g)(h)(u)


def matrix_coefficient(lam, ell, g):
    """Closed form of ``(h_{ell,lam}, pi_lam(g) h_{ell,lam})`` in L2(R)."""
    lam = check_lambda(lam)
    ell = check_degree(ell)
    a = np.asarray(g.a, dtype=float)
    b = np.asarray(g.b, dtype=float)
    c = np.asarray(g.c, dtype=float)
    phase = np.exp(-2j * math.pi * lam * c) * np.exp(1j * math.pi * lam * b * a)
    return phase * laguerre_fn(ell, math.pi * abs(lam) * (a * a + b * b))


def central_difference(h, u, step=1e-3):
    """Fourth-order centered finite difference of a callable."""
    u = np.asarray(u, dtype=float)
    return (
        -h(u + 2 * step) + 8 * h(u + step) - 8 * h(u - step) + h(u - 2 * step)
    ) / (12 * step)


def infinitesimal_action(lam, which, h, u, dh=None):
    """Infinitesimal Schrodinger action of ``A``, ``B`` or ``S`` on ``h``.

    ``A`` differentiates (``dh`` if given, else a fourth-order finite
    difference), ``B`` multiplies by ``2 pi i lam u`` and ``S`` by
    ``2 pi i lam``.
    """
    lam = check_lambda(lam)
    u = np.asarray(u, dtype=float)
    if which == "A":
        return np.asarray(dh(u) if dh is not None else central_difference(h, u), dtype=complex)
    if which == "B":
        return 2j * math.pi * lam * u * h(u)
    if which == "S":
        return 2j * math.pi * lam * np.asarray(h(u), dtype=complex)
    raise ValueError(f"which must be one of 'A', 'B', 'S', got {which!r}")


def hermite_window(ell, lam):
    """``h_{ell,lam}`` as a callable, convenient for the representation helpers."""
    return lambda u: hermite_rescaled(ell, lam, u)
