"""Conventional shape-invariant, Junker-Roy CES and Krein-Adler quantum systems.

Every wave function is written as psi(t) = G(t) N(t) / D(t) in the family's
natural coordinate t (xi for H, z = xi^2 for L, y = cos 2x for J), with G the
conventional ground-state prefactor and N, D analytic factors supplied with
their t-derivatives. All computation is in natural units (hbar = omega = 1);
hbar and omega only scale reported energies.
"""
from dataclasses import dataclass, field, replace
from itertools import product
from math import comb, factorial, sqrt
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import ConstraintViolation, DomainError, NodelessnessViolation, UnsupportedCombination
from .specfun import PolyFamily, _is_nonpos_int, gamma_fn, hyp1f1, hyp1f1_derivs, hyp2f1, orth_poly

FAMILIES = ("H", "L", "J")
VARIANTS = ("SI", "CES", "KA")
U_PREFACTORS = ("hypergeometric", "printed")

NODE_GRID_POINTS = 2000

# A factor maps (t, order) to [f, f', ..., f^(order)] in the natural coordinate.
Factor = Callable[[np.ndarray, int], list]


@dataclass(frozen=True)
class SystemSpec:
    family: str
    variant: str = "SI"
    b: float = 0.0
    beta: float = 0.0
    d: int = 1
    g: Optional[float] = None
    h: Optional[float] = None
    hbar: float = 1.0
    omega: float = 1.0
    # J-family second u-solution prefactor: ((1+y)/2)^(h+1/2) or y^(2h+1)
    u_prefactor: str = "hypergeometric"

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        out = {"family": self.family, "variant": self.variant}
        if self.variant == "CES":
            out.update(b=self.b, beta=self.beta)
        if self.variant == "KA":
            out["d"] = self.d
        if self.family in ("L", "J"):
            out["g"] = self.g
        if self.family == "J":
            out["h"] = self.h
            if self.variant == "CES":
                out["u_prefactor"] = self.u_prefactor
        out["hbar"] = self.hbar
        if self.family in ("H", "L"):
            out["omega"] = self.omega
        return out


def breve_index(n, d):
    """Original-system index of the Krein-Adler level with n nodes."""
    return n if n < d else n + 2


def _one(t, order):
    t = np.asarray(t)
    return [np.ones_like(t)] + [np.zeros_like(t) for _ in range(order)]


def _leibniz(f, g, order):
    return [sum(comb(m, j) * f[j] * g[m - j] for j in range(m + 1)) for m in range(order + 1)]


def _compositions(total, parts):
    for combo in product(range(total + 1), repeat=parts):
        if sum(combo) == total:
            yield combo


def wronskian_derivs(columns, order=0):
    """Derivatives [W, W', ..., W^(order)] of the Wronskian of k functions.

    ``columns[j][i]`` is the i-th derivative of the j-th function and must reach
    i = k - 1 + order. Differentiating a determinant row by row gives a
    multinomial sum over determinants with raised row orders.
    """
    k = len(columns)
    out = []
    for m in range(order + 1):
        total = 0
        for dist in _compositions(m, k):
            coef = factorial(m)
            for part in dist:
                coef //= factorial(part)
            mat = np.stack(
                [np.stack([np.asarray(columns[c][r + dist[r]]) for c in range(k)], axis=-1) for r in range(k)],
                axis=-2,
            )
            total = total + coef * np.linalg.det(mat)
        out.append(total)
    return out


class Coordinates:
    """Natural coordinate t of one family and its relation to x (hbar = omega = 1)."""

    def __init__(self, family, g=None, h=None):
        self.family = family
        self.g, self.h = g, h
        if family == "H":
            self.domain = (-np.inf, np.inf)
            self.poly = PolyFamily.hermite()
        elif family == "L":
            self.domain = (0.0, np.inf)
            self.poly = PolyFamily.laguerre(g - 0.5)
        else:
            self.domain = (-1.0, 1.0)
            self.poly = PolyFamily.jacobi(g - 0.5, h - 0.5)

    def prefactor(self, t):
        if self.family == "H":
            return np.exp(-np.asarray(t) ** 2 / 2)
        if self.family == "L":
            t = np.asarray(t)
            return np.exp(-t / 2) * np.power(t, self.g / 2)
        t = np.asarray(t)
        return np.power(1 - t, self.g / 2) * np.power(1 + t, self.h / 2)

    def prefactor_logderivs(self, t):
        t = np.asarray(t)
        if self.family == "H":
            return -t, -np.ones_like(t)
        if self.family == "L":
            return -0.5 + self.g / (2 * t), -self.g / (2 * t**2)
        g, h = self.g, self.h
        return -g / (2 * (1 - t)) + h / (2 * (1 + t)), -g / (2 * (1 - t) ** 2) - h / (2 * (1 + t) ** 2)

    def prefactor_logderivs_x(self, x):
        """(ln G)' and (ln G)'' in x, written directly in x to avoid 1 - cos 2x cancellation."""
        x = np.asarray(x)
        if self.family == "H":
            return -x, -np.ones_like(x)
        if self.family == "L":
            return -x + self.g / x, -1 - self.g / x**2
        g, h = self.g, self.h
        return g / np.tan(x) - h * np.tan(x), -g / np.sin(x) ** 2 - h / np.cos(x) ** 2

    def dtdx_squared(self, t, order):
        """(dt/dx)^2 written in t, with t-derivatives."""
        t = np.asarray(t)
        z = np.zeros_like(t)
        if self.family == "H":
            vals = [np.ones_like(t), z, z]
        elif self.family == "L":
            vals = [4 * t, 4 + z, z]
        else:
            vals = [4 * (1 - t**2), -8 * t, -8 + z]
        vals += [z] * max(0, order + 1 - len(vals))
        return vals[: order + 1]

    def t_of_x(self, x):
        """t, dt/dx, d^2t/dx^2 at (possibly complex) x."""
        x = np.asarray(x)
        if self.family == "H":
            return x, np.ones_like(x), np.zeros_like(x)
        if self.family == "L":
            return x**2, 2 * x, 2 * np.ones_like(x)
        return np.cos(2 * x), -2 * np.sin(2 * x), -4 * np.cos(2 * x)

    def x_of_t(self, t):
        t = np.asarray(t)
        if self.family == "H":
            return t
        if self.family == "L":
            return np.sqrt(t)
        return np.arccos(t) / 2

    def x_domain(self):
        if self.family == "H":
            return (-np.inf, np.inf)
        if self.family == "L":
            return (0.0, np.inf)
        return (0.0, np.pi / 2)

    def measure(self, t):
        t = np.asarray(t)
        if self.family == "H":
            return np.ones_like(t)
        if self.family == "L":
            return 1 / np.sqrt(t)
        return 1 / (2 * np.sqrt(1 - t**2))

    def w_from_logderiv(self, t, dlog):
        """Natural-variable superpotential from d ln(psi0)/dt.

        H: -d/dxi; L: -sqrt(z) d/dz (half the x-superpotential, paired with the
        level n + b/4); J: the x-superpotential itself, 2 sqrt(1-y^2) d/dy.
        """
        t = np.asarray(t)
        if self.family == "H":
            return -dlog
        if self.family == "L":
            return -np.sqrt(t) * dlog
        return 2 * np.sqrt(1 - t**2) * dlog

    def node_grid(self, num=NODE_GRID_POINTS):
        if self.family == "H":
            s = np.linspace(-np.arcsinh(24.0), np.arcsinh(24.0), num)
            return np.sinh(s)
        if self.family == "L":
            return np.exp(np.linspace(np.log(1e-10), np.log(600.0), num))
        edge = np.arctanh(1 - 1e-9)
        return np.tanh(np.linspace(-edge, edge, num))


@dataclass
class State:
    """psi_n(t) = G(t) N(t) / D(t)."""

    n: int
    numerator: Factor
    denominator: Factor
    coords: Coordinates = field(repr=False)

    def value(self, t):
        t = np.asarray(t)
        return self.coords.prefactor(t) * self.numerator(t, 0)[0] / self.denominator(t, 0)[0]

    def _ratio_logderivs(self, t):
        N = self.numerator(t, 2)
        D = self.denominator(t, 2)
        rn1, rn2 = N[1] / N[0], N[2] / N[0]
        rd1, rd2 = D[1] / D[0], D[2] / D[0]
        return rn1 - rd1, rn2 - rn1**2 - rd2 + rd1**2

    def logderivs(self, t):
        """(d ln psi/dt, d^2 ln psi/dt^2)."""
        g1, g2 = self.coords.prefactor_logderivs(t)
        r1, r2 = self._ratio_logderivs(t)
        return g1 + r1, g2 + r2

    def logderivs_x(self, x):
        t, tp, tpp = self.coords.t_of_x(x)
        g1, g2 = self.coords.prefactor_logderivs_x(x)
        r1, r2 = self._ratio_logderivs(t)
        return g1 + tp * r1, g2 + tpp * r1 + tp**2 * r2

    def factor_x(self, which, x, order=1):
        """N or D and its x-derivatives (order <= 2) at x."""
        t, tp, tpp = self.coords.t_of_x(x)
        f = (self.numerator if which == "N" else self.denominator)(t, order)
        out = [f[0]]
        if order >= 1:
            out.append(tp * f[1])
        if order >= 2:
            out.append(tpp * f[1] + tp**2 * f[2])
        return out


class System:
    """A validated system; build with :func:`build_system`."""

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.family = spec.family
        self.variant = spec.variant
        self.coords = Coordinates(spec.family, spec.g, spec.h)
        self.domain = self.coords.domain
        self._ground = None
        if self.variant == "CES":
            self._setup_u()

    def __repr__(self):
        return f"System({self.spec})"

    # levels ----------------------------------------------------------------

    def breve(self, n):
        if self.variant != "KA":
            return n
        return breve_index(n, self.spec.d)

    def _si_level(self, m):
        if self.family == "H":
            return 2.0 * m
        if self.family == "L":
            return float(m)
        g, h = self.spec.g, self.spec.h
        return 4.0 * m * (m + g + h)

    def level(self, n):
        """Constant E_n under the natural-variable square root (hbar = omega = 1)."""
        if n < 0:
            raise ValueError("level index must be >= 0")
        if n == 0:
            return 0.0
        if self.variant == "KA":
            return self._si_level(self.breve(n))
        shift = 0.0
        if self.variant == "CES":
            shift = self.spec.b / 4 if self.family == "L" else self.spec.b
        return self._si_level(n) + shift

    def energy(self, n):
        """Dimensional energy E_n."""
        s = self.spec
        lvl = self.level(n)
        if self.family == "H":
            return lvl * s.hbar * s.omega
        if self.family == "L":
            return 4 * lvl * s.hbar * s.omega
        return lvl * s.hbar**2

    def natural_level_from_energy(self, energy):
        s = self.spec
        if self.family == "H":
            return energy / (s.hbar * s.omega)
        if self.family == "L":
            return energy / (4 * s.hbar * s.omega)
        return energy / s.hbar**2

    # CES auxiliary function -------------------------------------------------

    def _setup_u(self):
        s = self.spec
        b = s.b
        if self.family == "H":
            self._u_params = ((-b / 4, 0.5), (0.5 - b / 4, 1.5))
        elif self.family == "L":
            g = s.g
            self._u_params = ((-b / 4, 0.5 - g), (0.5 + g - b / 4, 1.5 + g))
        else:
            g, h = s.g, s.h
            r = np.lib.scimath.sqrt((g + h) ** 2 - b)
            r = complex(r) if np.iscomplexobj(r) else float(r)
            self._u_params = (
                (-g / 2 - h / 2 - r / 2, -g / 2 - h / 2 + r / 2, 0.5 - h),
                (0.5 - g / 2 + h / 2 - r / 2, 0.5 - g / 2 + h / 2 + r / 2, 1.5 + h),
            )

    def u_function(self, t, order=0):
        """[u, u', ..., u^(order)] with respect to the natural coordinate (alpha = 1)."""
        if self.variant != "CES":
            raise UnsupportedCombination("u_function is defined for CES systems only")
        t = np.asarray(t)
        beta = self.spec.beta
        if self.family == "H":
            (a1, c1), (a2, c2) = self._u_params
            w, w1 = -t**2, -2 * t
            f = _compose_quadratic(hyp1f1_derivs(a1, c1, w, order), w1, order)
            if beta == 0:
                return f
            gq = _compose_quadratic(hyp1f1_derivs(a2, c2, w, order), w1, order)
            xg = [t * gq[m] + (m * gq[m - 1] if m else 0) for m in range(order + 1)]
            return [f[m] + beta * xg[m] for m in range(order + 1)]
        if self.family == "L":
            (a1, c1), (a2, c2) = self._u_params
            cpow = self.spec.g + 0.5
            f = [(-1) ** k * v for k, v in enumerate(hyp1f1_derivs(a1, c1, -t, order))]
            if beta == 0:
                return f
            gq = [(-1) ** k * v for k, v in enumerate(hyp1f1_derivs(a2, c2, -t, order))]
            pw = [_falling(cpow, k) * np.power(t, cpow - k) for k in range(order + 1)]
            second = _leibniz(pw, gq, order)
            return [f[m] + beta * second[m] for m in range(order + 1)]
        (A1, B1, C1), (A2, B2, C2) = self._u_params
        s = (1 + t) / 2
        f = [hyp2f1(A1, B1, C1, s, k) / 2**k for k in range(order + 1)]
        if beta == 0:
            return f
        gq = [hyp2f1(A2, B2, C2, s, k) / 2**k for k in range(order + 1)]
        if self.spec.u_prefactor == "printed":
            e = 2 * self.spec.h + 1
            base = t.astype(complex) if not np.iscomplexobj(t) else t
            pw = [_falling(e, k) * np.power(base, e - k) for k in range(order + 1)]
        else:
            e = self.spec.h + 0.5
            pw = [_falling(e, k) * np.power(s, e - k) / 2**k for k in range(order + 1)]
        second = _leibniz(pw, gq, order)
        return [f[m] + beta * second[m] for m in range(order + 1)]

    # Krein-Adler Wronskians ------------------------------------------------

    def ka_wronskian(self, t, extra=None, order=0):
        """[W, W', ..., W^(order)] of the Krein-Adler Wronskian in t."""
        w = ka_wronskian(self.spec.d, extra, t, family=self.coords.poly, order=order)
        return w if order else [w]

    # states ------------------------------------------------------------------

    def _poly_factor(self, m):
        fam = self.coords.poly

        def factor(t, order):
            return [orth_poly(fam, m, t, k) for k in range(order + 1)]

        return factor

    def state(self, n) -> State:
        if n < 0:
            raise ValueError("level index must be >= 0")
        if self.variant == "SI":
            return State(n, self._poly_factor(n), _one, self.coords)
        if self.variant == "KA":
            nb = self.breve(n)
            coords = self.coords

            def numerator(t, order):
                w3 = self.ka_wronskian(t, nb, order)
                return _leibniz(coords.dtdx_squared(t, order), w3, order)

            def denominator(t, order):
                return self.ka_wronskian(t, None, order)

            return State(n, numerator, denominator, self.coords)
        # CES
        u = lambda t, order: self.u_function(t, order)
        if n == 0:
            return State(0, _one, u, self.coords)
        if self.family != "H":
            raise UnsupportedCombination("CES excited states are implemented for family H only")
        pn, pm = self._poly_factor(n), self._poly_factor(n - 1)

        def numerator(t, order):
            uu = self.u_function(t, order + 1)
            a = _leibniz(uu[: order + 1], pn(t, order), order)
            b = _leibniz(uu[1 : order + 2], pm(t, order), order)
            return [a[m] + b[m] for m in range(order + 1)]

        return State(n, numerator, u, self.coords)

    def ground_state(self):
        if self._ground is None:
            self._ground = self.state(0)
        return self._ground

    def wavefunction(self, n, t):
        return self.state(n).value(t)

    # superpotential -----------------------------------------------------------

    def ground_logderiv(self, t):
        return self.ground_state().logderivs(t)[0]

    def superpotential_w(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        if np.any((t <= lo) | (t >= hi)):
            raise DomainError(f"t outside the open natural domain ({lo}, {hi})")
        return self.coords.w_from_logderiv(t, self.ground_logderiv(t))

    def measure(self, t):
        return self.coords.measure(t)

    def integrand(self, n, energy_level=None):
        """t -> level - W(t)^2 in natural units."""
        lvl = self.level(n) if energy_level is None else energy_level

        def f(t):
            return lvl - self.superpotential_w(t) ** 2

        return f

    # x-space (natural length units) -----------------------------------------

    def superpotential_x(self, x):
        """W(x) = -d/dx ln psi0 with hbar = omega = 1 (complex x allowed)."""
        l1, _ = self.ground_state().logderivs_x(x)
        return -l1

    def potential_x(self, x):
        """V(x) = W^2 - W' (hbar = omega = 1, ground energy pinned at 0)."""
        l1, l2 = self.ground_state().logderivs_x(x)
        return l1**2 + l2

    def level_x(self, n):
        """Energy in x-units with hbar = omega = 1."""
        lvl = self.level(n)
        return 4 * lvl if self.family == "L" else lvl


def _falling(c, k):
    out = 1.0
    for j in range(k):
        out *= c - j
    return out


def _compose_quadratic(F, w1, order):
    """Derivatives of F(w(t)) with w = -t^2 (w' = w1 = -2t, w'' = -2)."""
    out = [F[0]]
    if order >= 1:
        out.append(F[1] * w1)
    if order >= 2:
        out.append(F[2] * w1**2 - 2 * F[1])
    if order >= 3:
        out.append(F[3] * w1**3 - 6 * F[2] * w1)
    return out


def ka_wronskian(d, extra, t, family=None, order=0):
    """W[p_d, p_{d+1}] or W[p_d, p_{d+1}, p_extra] at t by determinant of derivative rows.

    Returns the value, or the list [W, W', ..., W^(order)] when order > 0.
    ``family`` defaults to Hermite.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if extra is not None and extra in (d, d + 1):
        raise ValueError("extra index must differ from d and d+1")
    family = family or PolyFamily.hermite()
    idx = [d, d + 1] + ([extra] if extra is not None else [])
    k = len(idx)
    t = np.asarray(t)
    cols = [[orth_poly(family, m, t, j) for j in range(k + order)] for m in idx]
    out = wronskian_derivs(cols, order)
    return out if order else out[0]


# validation -------------------------------------------------------------------


def _check_params(spec: SystemSpec):
    if spec.family not in FAMILIES:
        raise ConstraintViolation(f"family must be one of {FAMILIES}, got {spec.family!r}")
    if spec.variant not in VARIANTS:
        raise ConstraintViolation(f"variant must be one of {VARIANTS}, got {spec.variant!r}")
    if not spec.hbar > 0:
        raise ConstraintViolation("hbar > 0 violated")
    if not spec.omega > 0:
        raise ConstraintViolation("omega > 0 violated")
    if spec.family in ("L", "J"):
        if spec.g is None or not spec.g > 0.5:
            raise ConstraintViolation("g > 1/2 violated")
    if spec.family == "J":
        if spec.h is None or not spec.h > 0.5:
            raise ConstraintViolation("h > 1/2 violated")
    if spec.u_prefactor not in U_PREFACTORS:
        raise ConstraintViolation(f"u_prefactor must be one of {U_PREFACTORS}")
    if spec.variant == "KA":
        if int(spec.d) != spec.d or spec.d < 1:
            raise ConstraintViolation("d >= 1 (integer) violated")
    if spec.variant != "CES":
        return
    b, beta = spec.b, spec.beta
    if spec.family == "H":
        if not b > -2:
            raise ConstraintViolation("b > -2 violated")
        bound = 2 * gamma_fn(b / 4 + 1) / gamma_fn(b / 4 + 0.5)
        if not abs(beta) < bound:
            raise ConstraintViolation(f"|beta| < 2 Gamma(b/4+1)/Gamma(b/4+1/2) = {bound:.12g} violated")
    elif spec.family == "L":
        g = spec.g
        if not b > -4:
            raise ConstraintViolation("b > -4 violated")
        if _is_nonpos_int(0.5 - g):
            raise ConstraintViolation("g - 1/2 must not be a non-negative integer for CES-L (1F1 pole)")
        bound = -gamma_fn(0.5 - g) * float(special.rgamma(0.5 - g + b / 4)) * gamma_fn(b / 4 + 1) / gamma_fn(1.5 + g)
        if not beta > bound:
            raise ConstraintViolation(
                f"beta > -[Gamma(1/2-g)/Gamma(1/2-g+b/4)][Gamma(b/4+1)/Gamma(3/2+g)] = {bound:.12g} violated"
            )
    else:
        g, h = spec.g, spec.h
        if not b > -4 * (g + h + 1):
            raise ConstraintViolation("b > -4(g+h+1) violated")
        if _is_nonpos_int(0.5 - h):
            raise ConstraintViolation("h - 1/2 must not be a non-negative integer for CES-J (2F1 pole)")
        if not 1 - beta > 0:
            raise ConstraintViolation("alpha - beta > 0 violated")
        r = complex(np.lib.scimath.sqrt((g + h) ** 2 - b))
        num = special.gamma(1 + g / 2 + h / 2 + r / 2) * special.gamma(1 + g / 2 + h / 2 - r / 2)
        den_inv = special.rgamma(0.5 + g / 2 - h / 2 + r / 2) * special.rgamma(0.5 + g / 2 - h / 2 - r / 2)
        bound = -(gamma_fn(0.5 - h) / gamma_fn(1.5 + h)) * (num * den_inv).real
        if not beta > bound:
            raise ConstraintViolation(f"beta > (J-family Gamma-ratio bound) = {bound:.12g} violated")


def _check_nodeless(system: System):
    grid = system.coords.node_grid()
    if system.variant == "CES":
        vals = system.u_function(grid)[0]
        what = "u"
    elif system.variant == "KA":
        vals = system.ka_wronskian(grid)[0]
        what = "W[phi_d, phi_d+1]"
    else:
        return
    vals = np.asarray(vals)
    if np.iscomplexobj(vals):
        nonreal = np.abs(vals.imag) > 1e-12 * np.maximum(1.0, np.abs(vals.real))
        if np.any(nonreal):
            i = int(np.flatnonzero(nonreal)[0])
            raise NodelessnessViolation(f"{what} is not real at t={grid[i]:.12g}", float(grid[i]))
        vals = vals.real
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NodelessnessViolation(f"{what} is not finite at t={grid[i]:.12g}", float(grid[i]))
    sign = np.sign(vals)
    flips = np.flatnonzero((sign[:-1] * sign[1:]) <= 0)
    if flips.size:
        i = int(flips[0])
        where = 0.5 * (grid[i] + grid[i + 1])
        raise NodelessnessViolation(f"{what} has a node near t={where:.12g}", float(where))


def build_system(spec: SystemSpec) -> System:
    """Validate every parameter inequality, then check nodelessness on a grid."""
    _check_params(spec)
    system = System(spec)
    _check_nodeless(system)
    return system


# module-level aliases for the operation names ---------------------------------


def energy(system: System, n: int) -> float:
    return system.energy(n)


def u_function(system: System, t, order=0):
    vals = system.u_function(t, order)
    return vals if order else vals[0]


def superpotential_w(system: System, t):
    return system.superpotential_w(t)


def wavefunction(system: System, n: int, t):
    return system.wavefunction(n, t)


def level_pair(system, n):
    """(n, breve n) for reporting."""
    return n, system.breve(n)


def sqrt_level(system, n):
    return sqrt(system.level(n))
