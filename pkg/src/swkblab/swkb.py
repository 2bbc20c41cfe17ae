"""SWKB integrals, the quantization error Err(n), hbar invariance and spectrum inversion."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, MultipleBrackets, NoTurningPoints, SwkbLabError
from .quadrature import find_turning_points, integrate_sqrt_bracket
from .systems import System, SystemSpec, build_system


@dataclass
class SwkbResult:
    n: int
    I_over_pi: float
    err: float
    brackets_used: int
    turning_points: list = field(default_factory=list)

    @property
    def integral(self):
        return self.I_over_pi * pi


def scan_limit(system: System, level):
    """Outer extent of the turning-point scan in the natural coordinate."""
    if system.family == "H":
        return max(12.0, sqrt(max(level, 0.0)) + 10.0)
    if system.family == "L":
        return 16.0 * max(level, 0.0) + 50.0
    return None


def brackets_at_level(system: System, level, multi_bracket=False):
    f = system.integrand(0, energy_level=level)
    brackets = find_turning_points(f, system.domain, limit=scan_limit(system, level), weight=system.measure)
    if len(brackets) > 1 and not multi_bracket:
        raise MultipleBrackets(
            f"{2 * len(brackets)} turning points found; pass multi_bracket=True to sum the brackets",
            len(brackets),
        )
    return brackets


def integral_at_level(system: System, level, multi_bracket=False):
    """Dimensionless SWKB integral with the level constant replaced by ``level``."""
    brackets = brackets_at_level(system, level, multi_bracket)
    return sum(integrate_sqrt_bracket(b) for b in brackets), brackets


def swkb_integral(system: System, n: int, multi_bracket=False) -> SwkbResult:
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return SwkbResult(0, 0.0, 0.0, 0)
    total, brackets = integral_at_level(system, system.level(n), multi_bracket)
    return SwkbResult(
        n,
        total / pi,
        (total - n * pi) / total,
        len(brackets),
        [(b.a_left, b.a_right) for b in brackets],
    )


@dataclass
class SweepRow:
    value: float
    n: int
    I_over_pi: float = float("nan")
    err: float = float("nan")
    brackets_used: int = 0
    status: str = "ok"


def _sweep_point(template: SystemSpec, axis, value, n, multi_bracket):
    try:
        if axis == "n":
            system = build_system(template)
            n = int(value)
        else:
            system = build_system(template.replace(**{axis: float(value)}))
        res = swkb_integral(system, n, multi_bracket)
        return SweepRow(value, n, res.I_over_pi, res.err, res.brackets_used)
    except MultipleBrackets as exc:
        return SweepRow(value, n, brackets_used=exc.count, status=f"skipped:{exc.count} brackets")
    except SwkbLabError as exc:
        return SweepRow(value, n, status=f"skipped:{type(exc).__name__}: {exc}")


def swkb_sweep(template: SystemSpec, axis, grid, levels=(1,), multi_bracket=False, threads=1):
    """I/pi and Err over a parameter axis ('b', 'beta' or 'n').

    Points that violate constraints or hit the two-turning-point policy come
    back as rows with a 'skipped:...' status instead of raising.
    """
    if axis not in ("b", "beta", "n"):
        raise ValueError("axis must be 'b', 'beta' or 'n'")
    if axis == "n":
        jobs = [(v, int(v)) for v in grid]
    else:
        jobs = [(v, n) for n in levels for v in grid]
    work = lambda job: _sweep_point(template, axis, job[0], job[1], multi_bracket)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, jobs))
    return [work(j) for j in jobs]


def dimensional_integral(spec: SystemSpec, n: int, multi_bracket=False):
    """SWKB integral carried out in the dimensional x coordinate.

    H, L: x = xi sqrt(hbar/omega) and W(x) = sqrt(hbar omega) W_nat(xi).
    J: x is already an angle and W(x) = hbar W_nat(x).
    """
    system = build_system(spec)
    if n == 0:
        return 0.0
    e = system.energy(n)
    if system.family == "J":
        length, wscale = 1.0, spec.hbar
    else:
        length, wscale = sqrt(spec.hbar / spec.omega), sqrt(spec.hbar * spec.omega)

    def f(x):
        return e - (wscale * system.superpotential_x(np.asarray(x) / length)) ** 2

    lo, hi = system.coords.x_domain()
    nat_level = system.level_x(n)
    if system.family == "H":
        limit = length * max(12.0, sqrt(nat_level) + 10.0)
    elif system.family == "L":
        limit = length * (sqrt(nat_level) + 12.0)
    else:
        # cos 2x rounds to 1 within ~1e-8 of the ends; W diverges there anyway
        limit = None
        lo, hi = lo + 1e-6, hi - 1e-6
    brackets = find_turning_points(f, (lo * length, hi * length), limit=limit)
    if len(brackets) > 1 and not multi_bracket:
        raise MultipleBrackets(f"{2 * len(brackets)} turning points found", len(brackets))
    return sum(integrate_sqrt_bracket(b) for b in brackets)


def hbar_invariance_check(spec: SystemSpec, scales, n=1, rtol=1e-9):
    """True iff I/hbar agrees across hbar -> hbar*s for every s in scales."""
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    ratios = []
    for s in scales:
        scaled = spec.replace(hbar=spec.hbar * s)
        ratios.append(dimensional_integral(scaled, n) / scaled.hbar)
    ref = ratios[0]
    return all(abs(r - ref) <= rtol * abs(ref) for r in ratios)


def spectrum_from_swkb(system: System, n: int, e_hi=None, xtol=1e-12, multi_bracket=False):
    """Energy E solving I(E) = n pi hbar, by Brent's method on (0, e_hi)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    target = n * pi

    def excess(e):
        try:
            val, _ = integral_at_level(system, system.natural_level_from_energy(e), multi_bracket)
        except NoTurningPoints:
            val = 0.0
        return val - target

    if e_hi is None:
        exact = system.energy(n)
        e_hi = 4 * exact if exact > 0 else system.energy(1) or 1.0
        for _ in range(60):
            if excess(e_hi) > 0:
                break
            e_hi *= 2
    if excess(e_hi) < 0:
        raise BracketFailure(f"I(E_hi={e_hi:g}) is below n*pi*hbar; raise e_hi")
    return brentq(excess, 0.0, e_hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
