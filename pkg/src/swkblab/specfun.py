"""Gamma, classical orthogonal polynomials and the 1F1 / 2F1 hypergeometric functions.

Everything accepts complex arguments and numpy arrays. Hypergeometric series are
summed in double precision. Points where the series loses too many digits to
cancellation are summed again in double-double arithmetic (real parameters
only), and whatever is still unresolved goes to mpmath at 30 digits.
"""
from dataclasses import dataclass
from fractions import Fraction
import functools
import math

import mpmath
import numpy as np
from scipy import special

from .errors import SpecialFunctionError

# sum|t_k| / |sum| above this means more than ~4 digits were cancelled
_LOSS_LIMIT = 1e4
_MAX_TERMS = 5000
# 1F1 series for Re(w) beyond this would overflow after the Kummer factor
_BIG_ARG = 600.0
_CONNECTION_RADIUS = 0.75
_FALLBACK_DPS = 30
# double-double keeps ~32 digits, so this much cancellation still leaves ~1e-12
_DD_LOSS_LIMIT = 1e20
_SPLITTER = 134217729.0  # 2**27 + 1
# below this many troublesome points mpmath is cheaper than a double-double pass
_DD_MIN_BATCH = 12


def _is_nonpos_int(v):
    v = complex(v)
    if abs(v.imag) > 0:
        return False
    r = round(v.real)
    return r <= 0 and abs(v.real - r) < 1e-12


def poch(a, k):
    """Rising factorial (a)_k for integer k >= 0."""
    out = 1.0
    for j in range(k):
        out = out * (a + j)
    return out


def gamma_fn(x):
    """Gamma function for real x; raises at the poles 0, -1, -2, ..."""
    if _is_nonpos_int(x):
        raise SpecialFunctionError(f"Gamma has a pole at x={x}")
    return math.gamma(x)


@dataclass(frozen=True)
class PolyFamily:
    kind: str
    alpha: float = 0.0
    beta: float = 0.0

    @classmethod
    def hermite(cls):
        return cls("hermite")

    @classmethod
    def laguerre(cls, alpha):
        return cls("laguerre", alpha=alpha)

    @classmethod
    def jacobi(cls, alpha, beta):
        return cls("jacobi", alpha=alpha, beta=beta)

    def shifted(self, k):
        """Family whose degree-(n-k) member is proportional to the k-th derivative."""
        if self.kind == "hermite":
            return self
        if self.kind == "laguerre":
            return PolyFamily("laguerre", self.alpha + k)
        return PolyFamily("jacobi", self.alpha + k, self.beta + k)


def _recurrence(family, n, x):
    x = np.asarray(x)
    p_prev = np.ones_like(x, dtype=np.result_type(x, float))
    if n == 0:
        return p_prev
    kind = family.kind
    if kind == "hermite":
        p = 2 * x
        for k in range(1, n):
            p_prev, p = p, 2 * x * p - 2 * k * p_prev
    elif kind == "laguerre":
        a = family.alpha
        p = 1 + a - x
        for k in range(1, n):
            p_prev, p = p, ((2 * k + 1 + a - x) * p - (k + a) * p_prev) / (k + 1)
    elif kind == "jacobi":
        a, b = family.alpha, family.beta
        p = (a + 1) + (a + b + 2) * (x - 1) / 2
        for k in range(2, n + 1):
            s = 2 * k + a + b
            c0 = 2 * k * (k + a + b) * (s - 2)
            c1 = (s - 1) * (s * (s - 2) * x + a * a - b * b)
            c2 = 2 * (k + a - 1) * (k + b - 1) * s
            p_prev, p = p, (c1 * p - c2 * p_prev) / c0
    else:
        raise ValueError(f"unknown polynomial family {kind!r}")
    return p


def orth_poly(family: PolyFamily, n: int, x, deriv: int = 0):
    """Degree-n Hermite (physicists'), generalized Laguerre or Jacobi polynomial.

    ``deriv`` selects a derivative, evaluated through the standard identities
    H_n' = 2n H_{n-1}, L_n^(a)' = -L_{n-1}^(a+1) and
    P_n^(a,b)' = (n+a+b+1)/2 P_{n-1}^(a+1,b+1).
    """
    if n < 0:
        raise ValueError("polynomial degree must be >= 0")
    if deriv > n:
        return np.zeros_like(np.asarray(x), dtype=np.result_type(np.asarray(x), float))
    if deriv == 0:
        return _recurrence(family, n, x)
    kind = family.kind
    if kind == "hermite":
        scale = 2.0**deriv * poch(n - deriv + 1, deriv)
    elif kind == "laguerre":
        scale = (-1.0) ** deriv
    else:
        scale = poch(n + family.alpha + family.beta + 1, deriv) / 2.0**deriv
    return scale * _recurrence(family.shifted(deriv), n - deriv, x)


def orth_poly_derivs(family, n, x, order):
    """[p, p', ..., p^(order)] at x."""
    return [orth_poly(family, n, x, k) for k in range(order + 1)]


def _sum_scalar(ratio, z, kmin):
    t, s, mag, zabs = 1.0, 1.0, 1.0, abs(z)
    for k in range(_MAX_TERMS):
        t = t * ratio(k) * z / (k + 1)
        s += t
        at = abs(t)
        mag += at
        if k > zabs + kmin and at <= 1e-17 * mag:
            return s, (mag / abs(s) if s != 0 else math.inf)
    raise SpecialFunctionError("hypergeometric series did not converge")


def _sum_series(ratio, z, kmin=0.0):
    """Sum 1 + sum_k prod_{j<k} ratio(j) * z^k/k! style series elementwise.

    ``ratio(k)`` returns the parameter part of t_{k+1}/t_k (without z/(k+1)).
    Returns (value, loss) where loss = sum|t_k| / |value|; the caller treats a
    large loss as cancellation and re-evaluates elsewhere. Real z with real
    parameters is summed in real arithmetic.
    """
    z = np.asarray(z)
    real = not np.iscomplexobj(z) and not np.iscomplexobj(np.asarray(ratio(0)))
    z = z.astype(float if real else complex)
    if z.size <= 4:
        pairs = [_sum_scalar(ratio, v.item(), kmin) for v in z.ravel()]
        return (
            np.array([p[0] for p in pairs], dtype=z.dtype).reshape(z.shape),
            np.array([p[1] for p in pairs], dtype=float).reshape(z.shape),
        )
    shape = z.shape
    z = z.ravel()
    out = np.empty(z.shape, dtype=z.dtype)
    loss = np.empty(z.shape)
    # converged elements drop out of the working set
    idx = np.arange(z.size)
    s = np.ones(z.size, dtype=z.dtype)
    t = np.ones(z.size, dtype=z.dtype)
    mag = np.ones(z.size)
    zabs = np.abs(z)
    for k in range(_MAX_TERMS):
        if idx.size == 0:
            break
        t = t * (ratio(k) / (k + 1)) * z
        s = s + t
        at = np.abs(t)
        mag = mag + at
        if k <= kmin:
            continue
        done = (k > zabs + kmin) & (at <= 1e-17 * mag)
        if done.any():
            out[idx[done]] = s[done]
            with np.errstate(divide="ignore", invalid="ignore"):
                loss[idx[done]] = mag[done] / np.abs(s[done])
            keep = ~done
            idx, z, zabs, t, mag, s = idx[keep], z[keep], zabs[keep], t[keep], mag[keep], s[keep]
    if idx.size:
        raise SpecialFunctionError("hypergeometric series did not converge")
    return out.reshape(shape), loss.reshape(shape)


# --- double-double helpers (Dekker / Knuth error-free transformations) ---

def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_norm(hi, lo):
    s = hi + lo
    return s, lo - (s - hi)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    return _dd_norm(p, e + (xh * yl + xl * yh))


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    return _dd_norm(s, e + (xl + yl))


def _dd_const(num, den):
    """A rational, given as two Fractions, rounded to a (hi, lo) pair."""
    q = Fraction(num) / Fraction(den)
    hi = float(q)
    return hi, float(q - Fraction(hi))


def _rows_series(a, b, z, rows, kmin):
    """Double-precision 1F1-type series, one parameter pair per element.

    ``a[rows[i]]``, ``b[rows[i]]`` are the parameters used for ``z[i]``.
    Returns (value, loss) with loss = sum|t_k| / |value|.
    """
    out = np.empty(z.size, dtype=complex)
    loss = np.empty(z.size)
    idx = np.arange(z.size)
    ar, br = a[rows], b[rows]
    s = np.ones(z.size, dtype=complex)
    t = np.ones(z.size, dtype=complex)
    mag = np.ones(z.size)
    zabs, kmin = np.abs(z), kmin[rows]
    for k in range(_MAX_TERMS):
        if idx.size == 0:
            break
        t = t * ((ar + k) / ((br + k) * (k + 1))) * z
        s = s + t
        at = np.abs(t)
        mag = mag + at
        done = (k > zabs + kmin) & (at <= 1e-17 * mag)
        if done.any():
            out[idx[done]] = s[done]
            with np.errstate(divide="ignore", invalid="ignore"):
                loss[idx[done]] = mag[done] / np.abs(s[done])
            keep = ~done
            idx, z, zabs, kmin, ar, br = idx[keep], z[keep], zabs[keep], kmin[keep], ar[keep], br[keep]
            t, mag, s = t[keep], mag[keep], s[keep]
    if idx.size:
        raise SpecialFunctionError("hypergeometric series did not converge")
    return out, loss


@functools.lru_cache(maxsize=256)
def _dd_table(a, b):
    """Memoized exact coefficients (a+k)/((b+k)(k+1)) as double-double pairs."""
    fa, fb = Fraction(a), Fraction(b)
    hi, lo = [], []

    def coeff(k):
        while len(hi) <= k:
            j = len(hi)
            h, l = _dd_const(fa + j, (fb + j) * (j + 1))
            hi.append(h)
            lo.append(l)
        return hi[k], lo[k]

    return coeff


def _rows_series_dd(a, b, z, rows, kmin):
    """Double-double counterpart of ``_rows_series`` for real parameters."""
    tables = [_dd_table(float(x), float(y)) for x, y in zip(a, b)]
    zr, zi = z.real.copy(), z.imag.copy()
    zero = np.zeros(z.size)
    # term and running sum, each as (re_hi, re_lo, im_hi, im_lo)
    tr, trl, ti, til = np.ones(z.size), zero.copy(), zero.copy(), zero.copy()
    sr, srl, si, sil = np.ones(z.size), zero.copy(), zero.copy(), zero.copy()
    mag = np.ones(z.size)
    zabs, kmin = np.abs(z), kmin[rows]
    out = np.empty(z.size, dtype=complex)
    loss = np.empty(z.size)
    idx = np.arange(z.size)
    for k in range(_MAX_TERMS):
        if idx.size == 0:
            break
        pairs = [tab(k) for tab in tables]
        ch = np.array([p[0] for p in pairs])[rows]
        cl = np.array([p[1] for p in pairs])[rows]
        tr, trl = _dd_mul(tr, trl, ch, cl)
        ti, til = _dd_mul(ti, til, ch, cl)
        # (tr + i ti) * (zr + i zi), z exact in double
        a1, a1l = _dd_mul(tr, trl, zr, 0.0)
        a2, a2l = _dd_mul(ti, til, -zi, 0.0)
        b1, b1l = _dd_mul(tr, trl, zi, 0.0)
        b2, b2l = _dd_mul(ti, til, zr, 0.0)
        tr, trl = _dd_add(a1, a1l, a2, a2l)
        ti, til = _dd_add(b1, b1l, b2, b2l)
        sr, srl = _dd_add(sr, srl, tr, trl)
        si, sil = _dd_add(si, sil, ti, til)
        at = np.hypot(tr, ti)
        mag = mag + at
        done = (k > zabs + kmin) & (at <= 1e-33 * mag)
        if done.any():
            val = (sr[done] + srl[done]) + 1j * (si[done] + sil[done])
            out[idx[done]] = val
            with np.errstate(divide="ignore", invalid="ignore"):
                loss[idx[done]] = mag[done] / np.abs(val)
            keep = ~done
            idx, zr, zi, zabs, kmin, rows = idx[keep], zr[keep], zi[keep], zabs[keep], kmin[keep], rows[keep]
            tr, trl, ti, til, mag = tr[keep], trl[keep], ti[keep], til[keep], mag[keep]
            sr, srl, si, sil = sr[keep], srl[keep], si[keep], sil[keep]
    if idx.size:
        raise SpecialFunctionError("hypergeometric series did not converge")
    return out, loss


def _hyp1f1_rows(pairs, zc):
    """1F1(a_p; b_p; z) for every pair p and every complex z: array (len(pairs), z.size).

    Parameters must be non-special (no terminating a, no pole in b). Re z < 0
    uses Kummer's transformation. Cancellation-heavy points are redone in
    double-double arithmetic when the parameters are real, then in mpmath.
    """
    npair, m = len(pairs), zc.size
    A = np.array([p[0] for p in pairs])
    B = np.array([p[1] for p in pairs])
    zz = np.tile(zc, npair)
    rows = np.repeat(np.arange(npair), m)
    out = np.full(zz.shape, np.nan, dtype=complex)
    loss = np.full(zz.shape, np.inf)
    small = np.abs(zz) <= _BIG_ARG
    flip = zz.real < 0
    branches = ((small & ~flip, A, 1.0), (small & flip, B - A, -1.0))
    for mask, top, sign in branches:
        if mask.any():
            kmin = np.abs(top).astype(float)
            out[mask], loss[mask] = _rows_series(top, B, sign * zz[mask], rows[mask], kmin)
    out[flip & small] *= np.exp(zz[flip & small])
    bad = (loss > _LOSS_LIMIT) | ~np.isfinite(out)
    real_params = not (np.iscomplexobj(A) or np.iscomplexobj(B))
    if real_params and np.count_nonzero(bad & small) > _DD_MIN_BATCH:
        for mask, top, sign in branches:
            sel = mask & bad
            if sel.any():
                kmin = np.abs(top).astype(float)
                v, ls = _rows_series_dd(top, B, sign * zz[sel], rows[sel], kmin)
                if sign < 0:
                    v = v * np.exp(zz[sel])
                out[sel], loss[sel] = v, ls
        bad = ((loss > _DD_LOSS_LIMIT) | ~np.isfinite(out)) & small | ~small
    for i in np.flatnonzero(bad):
        out[i] = _mp_1f1(A[rows[i]], B[rows[i]], zz[i])
    return out.reshape(npair, m)


def _finish(out, real_input):
    if real_input:
        out = out.real
    return out[()] if out.ndim == 0 else out


def _terminating_sum(ratio, m, z):
    z = np.asarray(z, dtype=complex)
    s = np.ones(z.shape, dtype=complex)
    t = np.ones(z.shape, dtype=complex)
    for k in range(m):
        t = t * ratio(k) * z / (k + 1)
        s = s + t
    return s


def _mp_1f1(a, b, z):
    with mpmath.workdps(_FALLBACK_DPS):
        return complex(mpmath.hyp1f1(a, b, complex(z)))


def _mp_2f1(a, b, c, z):
    with mpmath.workdps(_FALLBACK_DPS):
        return complex(mpmath.hyp2f1(a, b, c, complex(z)))


def hyp1f1(a, b, z, deriv=0):
    """Confluent hypergeometric function 1F1(a; b; z), or its ``deriv``-th z-derivative.

    Real a, b, z use scipy's compiled routine. For complex input, real part of
    z < 0 goes through Kummer's transformation
    1F1(a;b;z) = e^z 1F1(b-a;b;-z) so the summed series never alternates in the
    real direction.
    """
    if deriv:
        return poch(a, deriv) / poch(b, deriv) * hyp1f1(a + deriv, b + deriv, z)
    z = np.asarray(z)
    real_input = not np.iscomplexobj(z) and not isinstance(a, complex) and not isinstance(b, complex)
    zc = np.atleast_1d(z).astype(float if real_input else complex).ravel()
    terminating = _is_nonpos_int(a)
    if _is_nonpos_int(b):
        if not (terminating and round(-complex(a).real) < round(-b)):
            raise SpecialFunctionError(f"1F1 undefined: b={b} is a non-positive integer")
    if terminating:
        m = int(round(-complex(a).real))
        out = _terminating_sum(lambda k: (a + k) / (b + k), m, zc)
        return _finish(out.reshape(z.shape), real_input)

    if real_input:
        # compiled real-argument routine; anything non-finite goes to mpmath
        out = special.hyp1f1(a, b, zc).astype(complex)
        for i in np.flatnonzero(~np.isfinite(out)):
            out[i] = _mp_1f1(a, b, zc[i])
        return _finish(out.reshape(z.shape), real_input)

    out = _hyp1f1_rows([(a, b)], zc)[0]
    return _finish(out.reshape(z.shape), real_input)


def _is_special_1f1(a, b):
    return _is_nonpos_int(a) or _is_nonpos_int(b)


def hyp1f1_derivs(a, b, z, order):
    """[F, F', ..., F^(order)] for F = 1F1(a; b; z), all orders summed together."""
    z = np.asarray(z)
    complex_input = np.iscomplexobj(z) or isinstance(a, complex) or isinstance(b, complex)
    pairs = [(a + k, b + k) for k in range(order + 1)]
    if not complex_input or any(_is_special_1f1(p, q) for p, q in pairs):
        return [hyp1f1(a, b, z, k) for k in range(order + 1)]
    zc = np.atleast_1d(z).astype(complex).ravel()
    vals = _hyp1f1_rows(pairs, zc)
    out = []
    for k in range(order + 1):
        v = poch(a, k) / poch(b, k) * vals[k].reshape(z.shape)
        out.append(v[()] if v.ndim == 0 else v)
    return out


def _log_connection(a, b, c, w, m):
    """2F1(a, b; c; 1-w) for integer m = c - a - b, where the two-term
    connection formula degenerates into a logarithmic one.

    m < 0 goes through Euler's transformation, which flips the sign of m.
    Returns (value, loss) like the direct series.
    """
    w = np.asarray(w, dtype=complex)
    if m < 0:
        out, loss = _log_connection(c - a, c - b, c, w, -m)
        return w**m * out, loss
    a, b = complex(a), complex(b)
    g_c = special.gamma(complex(c))
    head = np.zeros(w.shape, dtype=complex)
    if m > 0:
        coef = g_c * special.gamma(m) * special.rgamma(a + m) * special.rgamma(b + m)
        t = np.ones(w.shape, dtype=complex)
        for n in range(m):
            head = head + t
            t = t * (a + n) * (b + n) / ((n + 1) * (1 - m + n)) * w if n + 1 < m else t
        head = coef * head
    # tail: sum (a+m)_n (b+m)_n / (n! (n+m)!) w^n [ln w - psi(n+1) - psi(n+m+1) + psi(a+n+m) + psi(b+n+m)]
    lw = np.log(w)
    t = np.full(w.shape, 1.0 / math.factorial(m), dtype=complex)
    tail = np.zeros(w.shape, dtype=complex)
    mag = np.zeros(w.shape)
    for n in range(_MAX_TERMS):
        bracket = lw - special.psi(n + 1) - special.psi(n + m + 1) + special.psi(a + n + m) + special.psi(b + n + m)
        term = t * bracket
        tail = tail + term
        mag = mag + np.abs(term)
        if n > 2 and np.all(np.abs(term) <= 1e-17 * mag):
            break
        t = t * (a + m + n) * (b + m + n) / ((n + 1) * (n + m + 1)) * w
    else:
        raise SpecialFunctionError("logarithmic 2F1 connection series did not converge")
    pref = (-1) ** (m + 1) * g_c * special.rgamma(a) * special.rgamma(b)
    out = head + pref * w**m * tail
    scale = np.abs(head) + np.abs(pref * w**m) * mag
    with np.errstate(divide="ignore", invalid="ignore"):
        loss = scale / np.abs(out)
    return out, loss


def _gauss_sum(a, b, c):
    return special.gamma(c) * special.gamma(c - a - b) * special.rgamma(c - a) * special.rgamma(c - b)


def hyp2f1(a, b, c, z, deriv=0):
    """Gauss hypergeometric function 2F1(a, b; c; z), or its ``deriv``-th z-derivative.

    a and b may be complex (a conjugate pair keeps the result real). For real
    z in (0.75, 1) the z -> 1-z connection formula is used.
    """
    if deriv:
        return poch(a, deriv) * poch(b, deriv) / poch(c, deriv) * hyp2f1(a + deriv, b + deriv, c + deriv, z)
    z = np.asarray(z)
    params_real = all(abs(complex(p).imag) == 0 for p in (a, b))
    conj_pair = abs(complex(a) - np.conj(complex(b))) < 1e-14 * (1 + abs(complex(a)))
    real_input = not np.iscomplexobj(z) and (params_real or conj_pair)
    zc = np.atleast_1d(z).astype(float if not np.iscomplexobj(z) else complex).ravel()
    ratio = lambda k: (a + k) * (b + k) / (c + k)

    term = [int(round(-complex(p).real)) for p in (a, b) if _is_nonpos_int(p)]
    m = min(term) if term else None
    if _is_nonpos_int(c) and not (m is not None and m < round(-c)):
        raise SpecialFunctionError(f"2F1 undefined: c={c} is a non-positive integer")
    if m is not None:
        return _finish(_terminating_sum(ratio, m, zc).reshape(z.shape), real_input)

    out = np.full(zc.shape, np.nan, dtype=complex)
    loss = np.zeros(zc.shape)
    direct = np.abs(zc) <= _CONNECTION_RADIUS
    if np.any(direct):
        out[direct], loss[direct] = _sum_series(ratio, zc[direct], abs(a) + abs(b))

    near_one = (~direct) & (np.abs(zc.imag) < 1e-15) & (zc.real > _CONNECTION_RADIUS) & (zc.real < 1)
    cab = complex(c - a - b)
    degenerate = abs(cab.imag) < 1e-14 and abs(cab.real - round(cab.real)) < 1e-8
    if np.any(near_one) and not degenerate:
        w = 1 - zc[near_one]
        g_c = special.gamma(c)
        a1 = g_c * special.gamma(cab) * special.rgamma(c - a) * special.rgamma(c - b)
        a2 = g_c * special.gamma(-cab) * special.rgamma(a) * special.rgamma(b)
        s1, l1 = _sum_series(lambda k: (a + k) * (b + k) / (a + b - c + 1 + k), w, abs(a) + abs(b))
        s2, l2 = _sum_series(lambda k: (c - a + k) * (c - b + k) / (cab + 1 + k), w, abs(c - a) + abs(c - b))
        out[near_one] = a1 * s1 + a2 * w**cab * s2
        loss[near_one] = np.maximum(l1, l2)
    elif np.any(near_one):
        out[near_one], loss[near_one] = _log_connection(a, b, c, 1 - zc[near_one], int(round(cab.real)))

    at_one = (np.abs(zc - 1) == 0)
    if np.any(at_one):
        if cab.real <= 0:
            raise SpecialFunctionError("2F1 diverges at z=1 when Re(c-a-b) <= 0")
        out[at_one] = _gauss_sum(a, b, c)

    bad = (loss > _LOSS_LIMIT) | ~np.isfinite(out)
    for i in np.flatnonzero(bad):
        try:
            out[i] = _mp_2f1(a, b, c, zc[i])
        except (ValueError, ZeroDivisionError, mpmath.libmp.NoConvergence) as exc:
            raise SpecialFunctionError(f"2F1 did not converge at z={zc[i]}") from exc
    return _finish(out.reshape(z.shape), real_input)
