"""Quantum momentum function in the complex x plane: poles, zeros, branch points, contour actions.

Everything is in natural units (hbar = omega = 1, x the natural length), so
residues and actions come out in units of hbar. With psi = G N / D, the QMF is

    p = -i psi'/psi = -i [(ln G)' + N'/N - D'/D]

so its poles are the zeros of N (residue -i) and of D (residue +i). Zeros are
counted by the argument principle on rectangle boundaries (the phase of an
entire function tracked along each edge) and polished by Newton's method with
analytic derivatives.
"""
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import QuadratureError, SingularContour, UnsupportedCombination
from .quadrature import find_turning_points, gauss_legendre
from .systems import System

PHASE_STEP = 0.5
EDGE_SAMPLES = 33
MAX_EDGE_DEPTH = 40
MIN_EDGE = 1e-13
POLISH_SIZE = 0.05
MIN_CELL = 1e-9
MAX_CELL_DEPTH = 40
# off-centre split keeps new cell edges away from symmetry axes where zeros sit
SPLIT = 0.5371
GRID_OFFSET = 0.0913
RESIDUE_POINTS = 64
PANEL_ORDER = 20


class _Unresolved(Exception):
    pass


@dataclass
class SingularityReport:
    region: tuple
    cells: tuple
    poles: list = field(default_factory=list)  # (location, residue)
    zeros: list = field(default_factory=list)
    branch_points: list = field(default_factory=list)
    unresolved_cells: list = field(default_factory=list)

    def pole_locations(self):
        return [p for p, _ in self.poles]

    def as_dict(self):
        c = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {
            "region": list(self.region),
            "cells": list(self.cells),
            "poles": [{"location": c(z), "residue": c(r)} for z, r in self.poles],
            "zeros": [c(z) for z in self.zeros],
            "branch_points": [c(z) for z in self.branch_points],
            "unresolved_cells": [list(r) for r in self.unresolved_cells],
        }


@dataclass
class ContourResult:
    contour: tuple
    J: complex
    n_expected: int

    @property
    def deviation(self):
        return self.J - self.n_expected

    def as_dict(self):
        return {
            "contour": list(self.contour),
            "J": [float(self.J.real), float(self.J.imag)],
            "n_expected": self.n_expected,
        }


# analytic functions built from a state ------------------------------------------


def _state(system: System, n):
    return system.state(n)


def _factor_fn(state, which):
    def fn(x, order=1):
        return state.factor_x(which, np.asarray(x, dtype=complex), order)

    return fn


def _qmf_zero_fn(system, state):
    """Z = (ln G)' N D + N' D - N D', whose zeros (off N, D zeros) are zeros of p."""
    coords = system.coords

    def fn(x, order=1):
        x = np.asarray(x, dtype=complex)
        g1, g2 = coords.prefactor_logderivs_x(x)
        N = state.factor_x("N", x, 2)
        D = state.factor_x("D", x, 2)
        z = g1 * N[0] * D[0] + N[1] * D[0] - N[0] * D[1]
        if order == 0:
            return [z]
        dz = g2 * N[0] * D[0] + g1 * (N[1] * D[0] + N[0] * D[1]) + N[2] * D[0] - N[0] * D[2]
        return [z, dz]

    return fn


def _branch_fn(system, level):
    """B = E (N0 D0)^2 - S^2 with S = -(ln G)' N0 D0 - N0' D0 + N0 D0'.

    B / (N0 D0)^2 = E - W^2, so zeros of B are the branch points of sqrt(E - W^2).
    """
    coords = system.coords
    ground = system.ground_state()

    def fn(x, order=1):
        x = np.asarray(x, dtype=complex)
        g1, g2 = coords.prefactor_logderivs_x(x)
        N = ground.factor_x("N", x, 2)
        D = ground.factor_x("D", x, 2)
        nd = N[0] * D[0]
        nd1 = N[1] * D[0] + N[0] * D[1]
        s = -g1 * nd - N[1] * D[0] + N[0] * D[1]
        b = level * nd**2 - s**2
        if order == 0:
            return [b]
        s1 = -g2 * nd - g1 * nd1 - N[2] * D[0] + N[0] * D[2]
        return [b, 2 * level * nd * nd1 - 2 * s * s1]

    return fn


# argument principle ---------------------------------------------------------------


def _edge_phase(f, a, b):
    """Total change of arg f along the segment a -> b."""
    total = 0.0
    stack = [(a, b, 0)]
    while stack:
        s0, s1, depth = stack.pop()
        pts = s0 + (s1 - s0) * np.linspace(0.0, 1.0, EDGE_SAMPLES)
        vals = f(pts, 0)[0]
        if not np.all(np.isfinite(vals)) or np.any(vals == 0):
            raise _Unresolved("function vanishes or is not finite on the edge")
        steps = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(steps)) > PHASE_STEP:
            if depth >= MAX_EDGE_DEPTH or abs(s1 - s0) < MIN_EDGE:
                raise _Unresolved("a zero lies on or next to the edge")
            mid = 0.5 * (s0 + s1)
            stack.append((mid, s1, depth + 1))
            stack.append((s0, mid, depth + 1))
            continue
        total += float(np.sum(steps))
    return total


def _corners(rect):
    x0, x1, y0, y1 = rect
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


def winding(f, rect, cache=None):
    """Number of zeros of the analytic f inside the rectangle (x0, x1, y0, y1).

    ``cache`` (a dict) lets neighbouring cells share the phase change along a
    common edge; it must only be reused with the same f.
    """
    cs = _corners(rect)
    total = 0.0
    for a, b in zip(cs, cs[1:] + cs[:1]):
        if cache is None:
            total += _edge_phase(f, a, b)
        elif (a, b) in cache:
            total += cache[(a, b)]
        elif (b, a) in cache:
            total -= cache[(b, a)]
        else:
            cache[(a, b)] = _edge_phase(f, a, b)
            total += cache[(a, b)]
    w = total / (2 * pi)
    k = round(w)
    if abs(w - k) > 0.05:
        raise _Unresolved(f"non-integer winding {w:.4f}")
    return int(k)


def _newton(f, x0, tol=1e-14, maxiter=60):
    x = complex(x0)
    for _ in range(maxiter):
        vals = f(np.array([x]), 1)
        val, der = complex(vals[0][0]), complex(vals[1][0])
        if der == 0:
            return None
        step = val / der
        x -= step
        if abs(step) <= tol * max(1.0, abs(x)):
            return x
    return None


def _inside(x, rect, slack=0.0):
    x0, x1, y0, y1 = rect
    sx, sy = slack * (x1 - x0), slack * (y1 - y0)
    return x0 - sx <= x.real <= x1 + sx and y0 - sy <= x.imag <= y1 + sy


def _split(rect, frac):
    x0, x1, y0, y1 = rect
    xm = x0 + frac * (x1 - x0)
    ym = y0 + frac * (y1 - y0)
    return [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]


def find_zeros(f, region, cells=(8, 8)):
    """Zeros of an analytic function in a rectangle by recursive cell winding.

    Returns (zeros, unresolved) where zeros is a list of (location, multiplicity).
    """
    x0, x1, y0, y1 = region
    nx, ny = cells
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    # nudge interior grid lines off the symmetry axes
    xs[1:-1] += GRID_OFFSET * (x1 - x0) / nx
    ys[1:-1] += GRID_OFFSET * (y1 - y0) / ny
    zeros, unresolved, cache = [], [], {}
    work = [((xs[i], xs[i + 1], ys[j], ys[j + 1]), 0) for j in range(ny) for i in range(nx)]
    while work:
        rect, depth = work.pop()
        try:
            count = winding(f, rect, cache)
        except _Unresolved:
            unresolved.append(rect)
            continue
        if count <= 0:
            continue
        size = max(rect[1] - rect[0], rect[3] - rect[2])
        if count == 1:
            # a lone zero: Newton from the centre, accepted only if it stays in the cell
            cx = complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))
            root = _newton(f, cx)
            if root is not None and _inside(root, rect, 1e-12 if size > POLISH_SIZE else 0.01):
                zeros.append((root, 1))
                continue
        if size <= MIN_CELL or depth >= MAX_CELL_DEPTH:
            cx = complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))
            zeros.append((cx, count))
            continue
        frac = SPLIT if depth % 2 == 0 else 1 - SPLIT
        work.extend((sub, depth + 1) for sub in _split(rect, frac))
    zeros.sort(key=lambda z: (round(z[0].real, 9), round(z[0].imag, 9)))
    return zeros, _merge_unresolved(f, unresolved)


def _merge_unresolved(f, rects):
    """Retry unresolved cells once with a different split before giving up."""
    out = []
    for rect in rects:
        try:
            for sub in _split(rect, 0.3):
                if winding(f, sub) != 0:
                    raise _Unresolved
        except _Unresolved:
            out.append(rect)
    return out


# public operations ----------------------------------------------------------------


def _check_supported(system, n):
    # raises UnsupportedCombination for CES-L/J excited states
    return system.state(n)


def clip_region(system: System, region):
    """Clip a rectangle to Re x inside the open x-domain of the family."""
    x0, x1, y0, y1 = region
    lo, hi = system.coords.x_domain()
    eps = 1e-6
    if np.isfinite(lo):
        x0 = max(x0, lo + eps)
    if np.isfinite(hi):
        x1 = min(x1, hi - eps)
    if x0 >= x1:
        raise ValueError("region does not intersect the domain")
    return (x0, x1, y0, y1)


def qmf_eval(system: System, n: int, x):
    """p = -i psi_n'/psi_n at complex x (natural units)."""
    state = _check_supported(system, n)
    x = np.asarray(x, dtype=complex)
    N = state.factor_x("N", x, 0)[0]
    D = state.factor_x("D", x, 0)[0]
    if np.any(np.abs(N) < 1e-300) or np.any(np.abs(D) < 1e-300):
        raise SingularContour("evaluation point sits on a zero of the wave function or its denominator")
    l1, _ = state.logderivs_x(x)
    return -1j * l1


def qmf_derivative(system: System, n: int, x):
    state = _check_supported(system, n)
    _, l2 = state.logderivs_x(np.asarray(x, dtype=complex))
    return -1j * l2


def qhj_residual_check(system: System, n: int, grid) -> float:
    """max over grid of |p^2 - i p' - (E - V)| relative to max(1, |E - V|) + |p|^2."""
    grid = np.asarray(grid, dtype=complex)
    p = qmf_eval(system, n, grid)
    dp = qmf_derivative(system, n, grid)
    ev = system.level_x(n) - system.potential_x(grid)
    res = np.abs(p**2 - 1j * dp - ev)
    scale = np.maximum(1.0, np.abs(ev)) + np.abs(p) ** 2
    return float(np.max(res / scale))


def default_qhj_grid(system: System, n: int, num=20):
    a, b = classical_turning_points(system, n)
    xs = np.linspace(a, b, num)
    ys = np.linspace(0.05, 0.45, num // 2)
    grid = (xs[:, None] + 1j * ys[None, :]).ravel()
    return np.concatenate([grid, np.conj(grid)])


def _residue(p, x0, radius):
    th = 2 * pi * np.arange(RESIDUE_POINTS) / RESIDUE_POINTS
    e = np.exp(1j * th)
    return complex(radius * np.mean(p(x0 + radius * e) * e))


def _attach_residues(p, locations, extra=()):
    out = []
    everything = list(locations) + list(extra)
    for z in locations:
        others = [abs(z - w) for w in everything if w is not z and abs(z - w) > 0]
        radius = min([1e-3] + [0.3 * d for d in others])
        out.append((z, _residue(p, z, radius)))
    return out


def cell_residue_scan(system: System, n: int, region, resolution=(8, 8)) -> SingularityReport:
    """Poles (with residues) and zeros of the QMF inside a rectangle."""
    state = _check_supported(system, n)
    region = clip_region(system, region)
    zN, uN = find_zeros(_factor_fn(state, "N"), region, resolution)
    zD, uD = find_zeros(_factor_fn(state, "D"), region, resolution)
    zZ, uZ = find_zeros(_qmf_zero_fn(system, state), region, resolution)
    poles = [z for z, _ in zN] + [z for z, _ in zD]
    p = lambda x: qmf_eval(system, n, x)
    report = SingularityReport(region, tuple(resolution))
    report.poles = _attach_residues(p, poles)
    report.zeros = [z for z, _ in zZ]
    report.unresolved_cells = uN + uD + uZ
    return report


def swkb_integrand_singularities(system: System, n: int, region, resolution=(8, 8)) -> SingularityReport:
    """Poles of W(x)^2 and branch points of sqrt(E_n - W(x)^2) inside a rectangle."""
    ground = system.ground_state()
    region = clip_region(system, region)
    zN, uN = find_zeros(_factor_fn(ground, "N"), region, resolution)
    zD, uD = find_zeros(_factor_fn(ground, "D"), region, resolution)
    zB, uB = find_zeros(_branch_fn(system, system.level_x(n)), region, resolution)
    poles = [z for z, _ in zN] + [z for z, _ in zD]
    w2 = lambda x: system.superpotential_x(x) ** 2

    report = SingularityReport(region, tuple(resolution))
    # residue of W^2 at a double pole is generally nonzero only through the
    # subleading term; report the coefficient of 1/(x - x0)^2 instead
    report.poles = [(z, _double_pole_coeff(w2, z, poles)) for z in poles]
    report.branch_points = [z for z, _ in zB if all(abs(z - q) > 1e-8 for q in poles)]
    report.unresolved_cells = uN + uD + uB
    return report


def _double_pole_coeff(f, z, poles):
    others = [abs(z - w) for w in poles if abs(z - w) > 0]
    radius = min([1e-3] + [0.3 * d for d in others])
    th = 2 * pi * np.arange(RESIDUE_POINTS) / RESIDUE_POINTS
    e = np.exp(1j * th)
    return complex(radius**2 * np.mean(f(z + radius * e) * e**2))


# contour integrals -----------------------------------------------------------------


def integrate_segment(fun, a, b, tol=1e-11, max_depth=40):
    """Adaptive Gauss-Legendre integral of a complex function along a -> b.

    A panel is accepted when halving changes it by less than ``tol`` times
    the integral of |fun| over it, the scale rounding noise in fun follows.
    """
    x, w = gauss_legendre(PANEL_ORDER)

    def panel(s0, s1):
        mid, half = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
        vals = fun(mid + half * x)
        if not np.all(np.isfinite(vals)):
            raise SingularContour("integrand not finite on the contour")
        return half * np.dot(w, vals), abs(half) * np.dot(w, np.abs(vals))

    total = 0.0 + 0.0j
    stack = [(a, b, panel(a, b)[0], 0)]
    while stack:
        s0, s1, whole, depth = stack.pop()
        mid = 0.5 * (s0 + s1)
        (left, lmag), (right, rmag) = panel(s0, mid), panel(mid, s1)
        if abs(left + right - whole) <= tol * (lmag + rmag):
            total += left + right
            continue
        if depth >= max_depth:
            raise SingularContour("contour passes too close to a singularity")
        stack.append((mid, s1, right, depth + 1))
        stack.append((s0, mid, left, depth + 1))
    return total


def contour_action(system: System, n: int, rect, tol=1e-11):
    """(1/2 pi) times the counterclockwise integral of p around a rectangle."""
    p = lambda x: qmf_eval(system, n, x)
    cs = _corners(rect)
    total = sum(integrate_segment(p, a, b, tol) for a, b in zip(cs, cs[1:] + cs[:1]))
    return total / (2 * pi)


def classical_turning_points(system: System, n: int):
    """Outermost real roots of V(x) = E_n (natural units)."""
    e = system.level_x(n)
    lo, hi = system.coords.x_domain()
    f = lambda x: (e - system.potential_x(np.asarray(x, dtype=float))).real
    if system.family == "H":
        limit = max(12.0, np.sqrt(abs(e)) + 10.0)
    elif system.family == "L":
        limit = np.sqrt(abs(e)) + 12.0
    else:
        limit = None
        lo, hi = lo + 1e-6, hi - 1e-6
    try:
        brackets = find_turning_points(f, (lo, hi), limit=limit)
    except QuadratureError:
        # an attractive centrifugal term lets the classical region reach the
        # domain edge; cut it off 1e-3 inside
        def clipped(x):
            x = np.asarray(x, dtype=float)
            near = np.zeros(x.shape, dtype=bool)
            if np.isfinite(lo):
                near |= x - lo < 1e-3
            if np.isfinite(hi):
                near |= hi - x < 1e-3
            return np.where(near, -1.0, f(x))

        brackets = find_turning_points(clipped, (lo, hi), limit=limit)
    return brackets[0].a_left, brackets[-1].a_right


def qhj_contour(system: System, n: int, height=0.1, margin=0.1):
    """Thin rectangle around the classical region, kept inside the open x-domain."""
    a, b = classical_turning_points(system, n)
    lo, hi = system.coords.x_domain()
    left = a - margin
    right = b + margin
    if np.isfinite(lo):
        left = max(left, 0.5 * (lo + a))
    if np.isfinite(hi):
        right = min(right, 0.5 * (hi + b))
    return (left, right, -height, height)


def qhj_action(system: System, n: int, contour=None) -> ContourResult:
    """J = (1/2 pi) closed integral of p dx; the QHJ condition says J = n."""
    _check_supported(system, n)
    rect = contour or qhj_contour(system, n)
    return ContourResult(tuple(rect), complex(contour_action(system, n, rect)), n)


def cancellation_check(system: System, n: int, R, attempts=5, nudge=0.02):
    """J over the square of half-width R minus J over the thin QHJ contour.

    If the square runs into a singularity R is nudged by +-2% (alternating,
    growing) up to ``attempts`` times. Returns (deviation, R_used).
    """
    if system.family != "H":
        raise UnsupportedCombination("the square-contour check is defined for family H")
    j_qhj = qhj_action(system, n).J
    tried = []
    for k in range(attempts + 1):
        step = ((k + 1) // 2) * nudge * (1 if k % 2 else -1)
        r = R * (1 + step)
        tried.append(r)
        try:
            j_sq = contour_action(system, n, (-r, r, -r, r))
        except SingularContour:
            continue
        return complex(j_sq - j_qhj), r
    raise SingularContour(f"square contour hits a singularity for every R in {tried}")
