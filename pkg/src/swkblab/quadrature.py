"""Turning-point search and integration of sqrt(f) between simple zeros of f."""
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .errors import NoTurningPoints, QuadratureError

SCAN_POINTS = 4000
ROOT_XTOL = 1e-14
AGREEMENT = 1e-11
MIN_ORDER = 16
MAX_ORDER = 4096
NEGATIVE_TOL = 1e-12
# J-family scan keeps this far from y = -1, 1
EDGE_MARGIN = 1e-9


@dataclass
class BracketIntegral:
    a_left: float
    a_right: float
    f: Callable
    weight: Optional[Callable] = None

    @property
    def width(self):
        return self.a_right - self.a_left

    @property
    def midpoint(self):
        return 0.5 * (self.a_left + self.a_right)

    def m(self, t):
        if self.weight is None:
            return np.ones_like(t)
        return self.weight(t)


@lru_cache(maxsize=None)
def gauss_legendre(n):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_doubling(func, lo, hi, tol=AGREEMENT, n0=MIN_ORDER, nmax=MAX_ORDER):
    """Integrate a smooth vectorized func over [lo, hi], doubling the Gauss order.

    Stops when two successive orders agree to ``tol`` relative (absolute for a
    vanishing integral). Returns (value, order).
    """
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    prev = None
    n = n0
    while n <= nmax:
        x, w = gauss_legendre(n)
        val = half * np.dot(w, func(mid + half * x))
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1.0 if abs(val) < tol else 0.0):
            return val, n
        prev = val
        n *= 2
    raise QuadratureError(f"Gauss-Legendre did not reach {tol:g} agreement by order {nmax}")


def scan_grid(domain, num=SCAN_POINTS, limit=None):
    """Scan points uniform in a boundary-compactified coordinate.

    Whole line: t = c tan(theta) with theta uniform, covering |t| <= limit.
    Half line: uniform in ln t on [1e-8, limit].
    Finite interval: uniform in t with EDGE_MARGIN kept from both ends.
    """
    lo, hi = domain
    if np.isinf(lo) and np.isinf(hi):
        limit = 24.0 if limit is None else limit
        c = limit / 6.0
        th = np.arctan(limit / c)
        return c * np.tan(np.linspace(-th, th, num))
    if np.isinf(hi):
        limit = 1e3 if limit is None else limit
        return lo + np.exp(np.linspace(np.log(1e-8), np.log(limit), num))
    return np.linspace(lo + EDGE_MARGIN, hi - EDGE_MARGIN, num)


def find_turning_points(f, domain, num=SCAN_POINTS, limit=None, weight=None):
    """All sign-change brackets of f, ordered and disjoint.

    Every maximal run where f > 0 on the scan becomes one BracketIntegral whose
    ends are refined with Brent's method. Raises NoTurningPoints if f is
    nowhere positive and QuadratureError if a positive run reaches the scan edge.
    """
    grid = scan_grid(domain, num, limit)
    vals = np.asarray(f(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = grid[~np.isfinite(vals)][0]
        raise QuadratureError(f"integrand is not finite at t={bad:.12g}")
    pos = vals > 0
    if not pos.any():
        raise NoTurningPoints("f < 0 on the whole scan: the level lies below the minimum of W^2")
    if pos[0] or pos[-1]:
        raise QuadratureError("f > 0 at the edge of the scan; the positive region is not bracketed")
    scalar = lambda t: float(f(np.array([t]))[0])
    edges = np.flatnonzero(np.diff(pos.astype(int)))
    brackets = []
    for up, down in zip(edges[::2], edges[1::2]):
        a = brentq(scalar, grid[up], grid[up + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        b = brentq(scalar, grid[down], grid[down + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        brackets.append(BracketIntegral(a, b, f, weight))
    return brackets


def _clamped_sqrt(vals, scale):
    if np.any(vals < -NEGATIVE_TOL * max(1.0, scale)):
        raise QuadratureError(f"integrand went negative inside the bracket (min {vals.min():.3e})")
    return np.sqrt(np.maximum(vals, 0.0))


def integrate_sqrt_bracket(bracket: BracketIntegral, tol=AGREEMENT):
    """Integral of sqrt(f) m over the bracket via t = mid + hw sin(theta)."""
    mid, hw = bracket.midpoint, 0.5 * bracket.width
    if hw <= 0:
        return 0.0

    def integrand(theta):
        t = mid + hw * np.sin(theta)
        vals = np.asarray(bracket.f(t), dtype=float)
        return _clamped_sqrt(vals, np.max(np.abs(vals))) * bracket.m(t) * hw * np.cos(theta)

    val, _ = gauss_doubling(integrand, -np.pi / 2, np.pi / 2, tol)
    return float(val)


def integrate_sqrt_one_sided(f, a, c, weight=None, singular="left", tol=AGREEMENT):
    """Integral of sqrt(f) m over [a, c] with a square-root zero at one end only.

    The substitution t = end + (other - end) s^2 absorbs the singular end; the
    other end must be a regular interior point.
    """
    end, other = (a, c) if singular == "left" else (c, a)
    span = other - end
    m = weight or (lambda t: np.ones_like(t))

    def integrand(s):
        t = end + span * s * s
        vals = np.asarray(f(t), dtype=float)
        return _clamped_sqrt(vals, np.max(np.abs(vals))) * m(t) * 2 * abs(span) * s

    val, _ = gauss_doubling(integrand, 0.0, 1.0, tol)
    return float(val)
