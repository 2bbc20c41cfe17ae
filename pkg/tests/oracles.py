"""Independent high-precision oracles used to produce the frozen expected values.

Nothing in here imports swkblab. Every value is computed with mpmath at
40 significant digits (or sympy for exact algebra) using brute-force series
sums, tanh-sinh quadrature and finite differences. Run

    python tests/oracles.py

to regenerate the numbers that are pasted into the test modules.
"""
import mpmath as mp
import sympy as sp

mp.mp.dps = 40


def series_1f1(a, b, z, terms=200):
    a, b, z = mp.mpf(a), mp.mpf(b), mp.mpc(z)
    s, t = mp.mpc(1), mp.mpc(1)
    for k in range(terms):
        t *= (a + k) / (b + k) * z / (k + 1)
        s += t
    return s


def series_2f1(a, b, c, z, terms=400):
    a, b, c, z = mp.mpf(a), mp.mpf(b), mp.mpf(c), mp.mpc(z)
    s, t = mp.mpc(1), mp.mpc(1)
    for k in range(terms):
        t *= (a + k) * (b + k) / (c + k) * z / (k + 1)
        s += t
    return s


def gamma_oracle(x):
    # recurrence up to a large argument, then the Stirling series there
    x = mp.mpf(x)
    shift = 60
    y = x + shift
    lg = (y - mp.mpf(1) / 2) * mp.log(y) - y + mp.log(2 * mp.pi) / 2
    for k, bern in enumerate([mp.bernoulli(2 * j) for j in range(1, 25)], start=1):
        lg += bern / (2 * k * (2 * k - 1) * y ** (2 * k - 1))
    val = mp.exp(lg)
    for k in range(shift):
        val /= x + k
    return val


def u_ces_h(b, beta, xi):
    b, beta, xi = mp.mpf(b), mp.mpf(beta), mp.mpc(xi)
    return series_1f1(-b / 4, 0.5, -xi**2, 400) + beta * xi * series_1f1(0.5 - b / 4, 1.5, -xi**2, 400)


def w_ces_h_fd(b, beta, xi):
    """W = -d/dxi ln psi0 by a high-order central difference at 40 digits."""
    psi0 = lambda t: mp.exp(-t**2 / 2) / mp.re(u_ces_h(b, beta, t))
    h = mp.mpf("1e-8")
    f = lambda t: mp.log(psi0(t))
    xi = mp.mpf(xi)
    d = (-f(xi + 2 * h) + 8 * f(xi + h) - 8 * f(xi - h) + f(xi - 2 * h)) / (12 * h)
    return -d


def f_ces_h(b, beta, n):
    def W(t):
        return w_ces_h_fd(b, beta, t)
    return lambda t: 2 * n + b - W(t) ** 2


def turning_points_ces_h(b, beta, n, guesses):
    F = f_ces_h(b, beta, n)
    return [mp.findroot(F, g, tol=mp.mpf("1e-30")) for g in guesses]


def w_ces_h_analytic(b, beta, xi):
    # closed-form derivative of u used only inside oracles (independent of swkblab)
    b, beta, xi = mp.mpf(b), mp.mpf(beta), mp.mpc(xi)
    a1, a2 = -b / 4, mp.mpf(0.5) - b / 4
    z = -xi**2
    u = series_1f1(a1, 0.5, z, 400) + beta * xi * series_1f1(a2, 1.5, z, 400)
    du = (a1 / mp.mpf(0.5)) * series_1f1(a1 + 1, 1.5, z, 400) * (-2 * xi) + beta * (
        series_1f1(a2, 1.5, z, 400) + xi * (a2 / mp.mpf(1.5)) * series_1f1(a2 + 1, 2.5, z, 400) * (-2 * xi)
    )
    return xi + du / u, u, du


def swkb_ces_h(b, beta, n, guesses=(-2, 2)):
    b, beta = mp.mpf(b), mp.mpf(beta)
    F = lambda t: 2 * n + b - mp.re(w_ces_h_analytic(b, beta, t)[0]) ** 2
    aL, aR = (mp.findroot(F, g, tol=mp.mpf("1e-30")) for g in guesses)
    val = mp.quad(lambda t: mp.sqrt(max(F(t), 0)), [aL, aR], method="tanh-sinh")
    return aL, aR, val


def expansion_term_ces_h(b, beta, n, k, guesses=(-2, 2)):
    b, beta = mp.mpf(b), mp.mpf(beta)
    F = lambda t: 2 * n + b - mp.re(w_ces_h_analytic(b, beta, t)[0]) ** 2
    aL, aR = (mp.findroot(F, g, tol=mp.mpf("1e-30")) for g in guesses)
    coeff = (-1) ** k * mp.factorial(2 * k) / ((1 - 2 * k) * mp.factorial(k) ** 2 * 4**k)

    def integrand(t):
        P = (t - aL) * (aR - t)
        return (F(t) - P) ** k / P ** (k - mp.mpf(1) / 2)

    return coeff * mp.quad(integrand, [aL, aR], method="tanh-sinh")


def ka_wronskian_symbolic(d, extra, xi):
    x = sp.symbols("x")
    fs = [sp.hermite(d, x), sp.hermite(d + 1, x)]
    if extra is not None:
        fs.append(sp.hermite(extra, x))
    m = len(fs)
    mat = sp.Matrix(m, m, lambda j, k: sp.diff(fs[k], x, j))
    return sp.expand(mat.det()), sp.expand(mat.det()).subs(x, xi)


def ka_psi_symbolic(d, nb, xi):
    x = sp.symbols("x")
    w3, _ = ka_wronskian_symbolic(d, nb, xi)
    w2, _ = ka_wronskian_symbolic(d, None, xi)
    expr = sp.exp(-x**2 / 2) * w3 / w2
    return sp.N(expr.subs(x, sp.nsimplify(xi)), 30)


def qmf_ces_h(b, beta, n, x):
    """p = -i psi'/psi for the CES-H excited state, psi built by the intertwining
    operator acting on the oscillator state, differentiated at 40 digits."""
    b, beta = mp.mpf(b), mp.mpf(beta)
    x = mp.mpc(x)

    def psi(t):
        W, u, du = w_ces_h_analytic(b, beta, t)
        phi = lambda s: mp.exp(-s**2 / 2) * mp.hermite(n - 1, s)
        return -mp.diff(phi, t) + W * phi(t)

    return -1j * mp.diff(psi, x) / psi(x)


def main():
    print("gamma(1.25) =", mp.nstr(gamma_oracle(1.25), 20), " mp.gamma:", mp.nstr(mp.gamma(1.25), 20))
    print("1F1(-0.25,0.5,-1) =", mp.nstr(series_1f1(-0.25, 0.5, -1), 20))
    print("2F1(-0.5,0.7,1.3,0.4) =", mp.nstr(series_2f1(-0.5, 0.7, 1.3, 0.4), 20))
    print("u CES-H b=1 beta=0.3 xi=0.7 =", mp.nstr(u_ces_h(1, 0.3, 0.7), 20))
    print("W CES-H b=1 beta=0 xi=0.5 (FD) =", mp.nstr(w_ces_h_fd(1, 0, 0.5), 20))
    print("W CES-H b=1 beta=0 xi=0.5 (analytic) =", mp.nstr(w_ces_h_analytic(1, 0, 0.5)[0], 20))
    print("KA W3(d=1, 3, x) =", ka_wronskian_symbolic(1, 3, 1))
    print("KA W2(d=1, x) =", ka_wronskian_symbolic(1, None, 1))
    print("KA W3(d=1, 0, x) =", ka_wronskian_symbolic(1, 0, 1))
    print("KA psi(d=1, n=1 -> nb=3, 0.9) =", ka_psi_symbolic(1, 3, 0.9))
    aL, aR, _ = swkb_ces_h(1, 0, 1)
    print("turning points CES-H b=1 n=1 =", mp.nstr(aL, 20), mp.nstr(aR, 20))
    aL, aR, val = swkb_ces_h(0.5, 0, 1)
    print("I CES-H b=0.5 n=1 =", mp.nstr(val, 20), " I/pi =", mp.nstr(val / mp.pi, 20))
    aL, aR, val = swkb_ces_h(0.1, 0, 1)
    print("I/pi CES-H b=0.1 n=1 =", mp.nstr(val / mp.pi, 20))
    print("T1 CES-H b=0.5 n=1 =", mp.nstr(expansion_term_ces_h(0.5, 0, 1, 1), 20))
    print("T2 CES-H b=0.5 n=1 =", mp.nstr(expansion_term_ces_h(0.5, 0, 1, 2), 20))
    print("p CES-H b=0.1 n=1 x=0.3+0.4i =", mp.nstr(qmf_ces_h(0.1, 0, 1, mp.mpc(0.3, 0.4)), 20))


if __name__ == "__main__":
    main()
