"""Residual Delta = n pi - I, its binomial series about b = beta = 0, and convergence domains.

Writing the integrand as sqrt(kappa P) sqrt(1 + r) with P = (t - a_L)(a_R - t)
and r = (Q/kappa - P)/P, where Q = (level - W^2) rho, the family constants are

    H: rho = 1,       kappa = 1,              weight 1
    L: rho = z,       kappa = 1/4,            weight 1/z
    J: rho = 1 - y^2, kappa = (2n + g + h)^2, weight 1/(2(1 - y^2))

and T_k = sqrt(kappa) c_k int r^k P^(1/2) weight dt with c_k the binomial
coefficients of sqrt(1 + u).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import pi, sqrt

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import MultipleBrackets, SwkbLabError, UnsupportedCombination
from .quadrature import AGREEMENT, BracketIntegral, gauss_doubling
from .swkb import brackets_at_level, swkb_integral
from .systems import System, SystemSpec, build_system

DEFAULT_ORDER = 10
SUP_SAMPLES = 2000
ENDPOINT_OFFSETS = (1e-3, 1e-4, 1e-5)


def binomial_half_coeff(k: int, exact=False):
    """k-th Taylor coefficient of sqrt(1 + u) about u = 0."""
    if k < 0:
        raise ValueError("k must be >= 0")
    c = Fraction(1)
    for j in range(1, k + 1):
        c = c * Fraction(3 - 2 * j, 2 * j)
    return c if exact else float(c)


def _family_constants(system: System, n):
    fam = system.family
    if fam == "H":
        return 1.0, (lambda t: np.ones_like(t)), (lambda t: np.ones_like(t))
    if fam == "L":
        return 0.25, (lambda t: t), (lambda t: 1 / t)
    kappa = (2 * n + system.spec.g + system.spec.h) ** 2
    return kappa, (lambda t: 1 - t**2), (lambda t: 1 / (2 * (1 - t**2)))


class _Expansion:
    """Everything needed to evaluate r(t) and the T_k on one bracket."""

    def __init__(self, system: System, n: int):
        if system.variant != "CES":
            raise UnsupportedCombination("the residual expansion is defined for CES systems")
        if n < 1:
            raise ValueError("n must be >= 1")
        self.system, self.n = system, n
        self.level = system.level(n)
        brackets = brackets_at_level(system, self.level, multi_bracket=True)
        if len(brackets) != 1:
            raise MultipleBrackets(f"{2 * len(brackets)} turning points; the expansion needs exactly two", len(brackets))
        self.bracket: BracketIntegral = brackets[0]
        self.a, self.b = self.bracket.a_left, self.bracket.a_right
        self.kappa, self.rho, self.weight = _family_constants(system, n)

    def ratio(self, t):
        t = np.asarray(t, dtype=float)
        q = (self.level - self.system.superpotential_w(t) ** 2) * self.rho(t)
        p = (t - self.a) * (self.b - t)
        return (q / self.kappa - p) / p

    def leading(self):
        a, b = self.a, self.b
        fam = self.system.family
        if fam == "H":
            return pi * (b - a) ** 2 / 8
        if fam == "L":
            return pi / 4 * (sqrt(b) - sqrt(a)) ** 2
        return sqrt(self.kappa) / 2 * pi / 2 * (2 - sqrt((1 - a) * (1 - b)) - sqrt((1 + a) * (1 + b)))

    def term(self, k, tol=AGREEMENT):
        if k == 0:
            return self.leading()
        mid, hw = 0.5 * (self.a + self.b), 0.5 * (self.b - self.a)

        def integrand(theta):
            t = mid + hw * np.sin(theta)
            return self.ratio(t) ** k * (hw * np.cos(theta)) ** 2 * self.weight(t)

        val, _ = gauss_doubling(integrand, -pi / 2, pi / 2, tol)
        return sqrt(self.kappa) * binomial_half_coeff(k) * val

    def endpoint_limit(self, side):
        """r at a turning point by quadratic Richardson extrapolation from inside."""
        width = self.b - self.a
        d = np.array(ENDPOINT_OFFSETS)
        t = self.a + d * width if side == "left" else self.b - d * width
        coef = np.polyfit(d, self.ratio(t), 2)
        return float(coef[-1])

    def sup_ratio(self, samples=SUP_SAMPLES):
        mid, hw = 0.5 * (self.a + self.b), 0.5 * (self.b - self.a)
        theta = np.linspace(-pi / 2, pi / 2, samples + 2)[1:-1]
        vals = np.abs(self.ratio(mid + hw * np.sin(theta)))
        i = int(np.argmax(vals))
        best = float(vals[i])
        lo, hi = theta[max(i - 1, 0)], theta[min(i + 1, samples - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda th: -abs(float(self.ratio(np.array([mid + hw * np.sin(th)]))[0])),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-10},
            )
            best = max(best, -float(res.fun))
        ends = (abs(self.endpoint_limit("left")), abs(self.endpoint_limit("right")))
        return max(best, *ends)


def expansion_term(system: System, n: int, k: int) -> float:
    """T_k of the residual series (T_0 is the closed-form leading term)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return _Expansion(system, n).term(k)


def convergence_ratio(system: System, n: int) -> float:
    """sup over the bracket of |r|; the series converges when this is below 1."""
    return _Expansion(system, n).sup_ratio()


@dataclass
class ExpansionReport:
    n: int
    K: int
    terms: list
    partial_sums: list
    integral: float
    delta_numeric: float
    sup_ratio: float
    inside_radius: bool
    diverging: bool
    turning_points: tuple = ()

    @property
    def delta_series(self):
        return [self.n * pi - s for s in self.partial_sums]

    def as_dict(self):
        return {
            "n": self.n,
            "K": self.K,
            "terms": self.terms,
            "partial_sums": self.partial_sums,
            "integral": self.integral,
            "delta_numeric": self.delta_numeric,
            "sup_ratio": self.sup_ratio,
            "inside_radius": self.inside_radius,
            "diverging": self.diverging,
            "turning_points": list(self.turning_points),
        }


def _diverging(terms):
    mags = [abs(t) for t in terms]
    run = 0
    for k in range(4, len(mags)):
        run = run + 1 if mags[k] > mags[k - 1] else 0
        if run >= 3:
            return True
    return False


def residual_report(system: System, n: int, K: int = DEFAULT_ORDER) -> ExpansionReport:
    exp = _Expansion(system, n)
    terms = [exp.term(k) for k in range(K + 1)]
    partial = list(np.cumsum(terms))
    integral = swkb_integral(system, n).integral
    ratio = exp.sup_ratio()
    return ExpansionReport(
        n=n,
        K=K,
        terms=terms,
        partial_sums=[float(s) for s in partial],
        integral=integral,
        delta_numeric=n * pi - integral,
        sup_ratio=ratio,
        inside_radius=ratio < 1,
        diverging=_diverging(terms),
        turning_points=(exp.a, exp.b),
    )


@dataclass
class DomainMap:
    n: int
    b_values: np.ndarray
    beta_values: np.ndarray
    ratio: np.ndarray  # indexed [beta, b]
    labels: np.ndarray
    boundary: list = field(default_factory=list)

    def inside(self):
        return self.labels == "inside"

    def rows(self):
        for i, beta in enumerate(self.beta_values):
            for j, b in enumerate(self.b_values):
                yield float(b), float(beta), float(self.ratio[i, j]), str(self.labels[i, j])


def _cell(template: SystemSpec, n, b, beta):
    try:
        system = build_system(template.replace(b=float(b), beta=float(beta)))
    except SwkbLabError:
        return np.nan, "invalid"
    try:
        r = convergence_ratio(system, n)
    except MultipleBrackets:
        return np.nan, "outside"
    return r, ("inside" if r < 1 else "outside")


def _boundary_points(b_values, beta_values, ratio):
    """Crossings of ratio = 1 between horizontally or vertically adjacent cells."""
    pts = []
    g = ratio - 1
    for i in range(len(beta_values)):
        for j in range(len(b_values)):
            for di, dj in ((0, 1), (1, 0)):
                i2, j2 = i + di, j + dj
                if i2 >= len(beta_values) or j2 >= len(b_values):
                    continue
                g1, g2 = g[i, j], g[i2, j2]
                if not (np.isfinite(g1) and np.isfinite(g2)) or g1 * g2 > 0 or g1 == g2:
                    continue
                s = g1 / (g1 - g2)
                b = b_values[j] + s * (b_values[j2] - b_values[j])
                beta = beta_values[i] + s * (beta_values[i2] - beta_values[i])
                pts.append((float(b), float(beta)))
    if pts:
        c = np.mean(pts, axis=0)
        pts.sort(key=lambda p: np.arctan2(p[1] - c[1], p[0] - c[0]))
    return pts


def domain_map(template: SystemSpec, n: int, b_values, beta_values, threads=1) -> DomainMap:
    """Label each (b, beta) grid point by whether the residual series converges.

    Points breaking the parameter constraints are 'invalid'; points with more
    than two turning points are 'outside' (the expansion is undefined there).
    """
    b_values = np.asarray(b_values, dtype=float)
    beta_values = np.asarray(beta_values, dtype=float)
    jobs = [(beta, b) for beta in beta_values for b in b_values]
    work = lambda job: _cell(template, n, job[1], job[0])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, jobs))
    else:
        cells = [work(j) for j in jobs]
    shape = (len(beta_values), len(b_values))
    ratio = np.array([c[0] for c in cells], dtype=float).reshape(shape)
    labels = np.array([c[1] for c in cells], dtype=object).reshape(shape)
    return DomainMap(n, b_values, beta_values, ratio, labels, _boundary_points(b_values, beta_values, ratio))
