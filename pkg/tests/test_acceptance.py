"""Acceptance criteria, run at their stated tolerances and runtime budgets.

Every test records a one-line PASS/FAIL verdict that is printed in the
terminal summary (and on stdout with ``pytest -s``).
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from swkblab import complexscan as cs
from swkblab.errors import SwkbLabError
from swkblab.residual import convergence_ratio, domain_map, residual_report
from swkblab.swkb import hbar_invariance_check, spectrum_from_swkb, swkb_integral
from swkblab.systems import SystemSpec, build_system

from .acceptance_log import record


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_c01_si_exactness():
    cases = [(SystemSpec("H"), 10)]
    cases += [(SystemSpec("L", g=g), 8) for g in (0.8, 1.5, 3.0)]
    cases += [(SystemSpec("J", g=g, h=h), 8) for g in (1.0, 2.5) for h in (1.0, 2.5)]
    with Clock() as clk:
        worst = 0.0
        for spec, top in cases:
            s = build_system(spec)
            worst = max(worst, max(abs(swkb_integral(s, n).I_over_pi - n) for n in range(1, top + 1)))
    ok = record(1, worst <= 1e-8, f"max |I/pi - n| = {worst:.2e} (tol 1e-8)", clk.seconds, 10)
    assert ok


def test_c02_appendix_spectrum():
    with Clock() as clk:
        s = build_system(SystemSpec("H"))
        worst = max(abs(spectrum_from_swkb(s, n) - 2 * n) for n in range(1, 7))
    ok = record(2, worst <= 1e-8, f"max |E_swkb - 2n| = {worst:.2e} (tol 1e-8)", clk.seconds, 5)
    assert ok


def test_c03_krein_adler_error():
    with Clock() as clk:
        s = build_system(SystemSpec("H", "KA", d=1))
        errs = [swkb_integral(s, n).err for n in range(1, 9)]
    band = abs(errs[0] - 0.11) <= 0.005
    shape = all(e > 0 for e in errs) and all(a > b for a, b in zip(errs, errs[1:]))
    ok = record(3, band and shape, f"Err(1) = {errs[0]:.4f}, positive and strictly decreasing: {shape}", clk.seconds, 10)
    assert ok


def _inside(b, beta):
    try:
        return convergence_ratio(build_system(SystemSpec("H", "CES", b=b, beta=beta)), 1) < 1
    except SwkbLabError:
        return False


def _edge(inside_at, outside_at, param):
    """Bisect the edge of the convergence domain along one parameter."""
    lo, hi = inside_at, outside_at
    while abs(hi - lo) > 1e-4:
        mid = 0.5 * (lo + hi)
        if _inside(*param(mid)):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_c04_convergence_radii():
    with Clock() as clk:
        b_minus = _edge(-1.5, -1.95, lambda v: (v, 0.0))
        b_plus = _edge(1.2, 1.7, lambda v: (v, 0.0))
        beta_edge = _edge(0.8, 1.1, lambda v: (0.0, v))
    checks = {
        "b-": (b_minus, -1.64, 0.05),
        "b+": (b_plus, 1.44, 0.05),
        "|beta|": (beta_edge, 1.01, 0.03),
    }
    parts = []
    ok = True
    for name, (got, want, tol) in checks.items():
        hit = abs(got - want) <= tol
        ok &= hit
        parts.append(f"{name} = {got:.4f} ({want} +- {tol}: {'ok' if hit else 'MISS'})")
    ok = record(4, ok, "; ".join(parts), clk.seconds, 60)
    assert ok


@pytest.mark.slow
def test_c05_domain_inclusion():
    b_values = np.linspace(-1.99, 4.0, 60)
    beta_values = np.linspace(-1.128, 1.128, 60)
    with Clock() as clk:
        inside = [domain_map(SystemSpec("H", "CES"), n, b_values, beta_values).inside() for n in (1, 2, 3)]
    pairs = []
    ok = True
    for lo, hi, name in ((inside[0], inside[1], "D1<D2"), (inside[1], inside[2], "D2<D3")):
        subset = not np.any(lo & ~hi)
        strict = int(np.sum(hi & ~lo))
        ok &= subset and strict >= 1
        pairs.append(f"{name}: subset={subset}, strict cells={strict}")
    sizes = ", ".join(str(int(m.sum())) for m in inside)
    ok = record(5, ok, f"{'; '.join(pairs)}; |D1|,|D2|,|D3| = {sizes}", clk.seconds, 600)
    assert ok


def test_c06_series_vs_direct():
    rng = np.random.default_rng(20240611)
    worst, taken, tried = 0.0, 0, 0
    with Clock() as clk:
        while taken < 20:
            tried += 1
            b, beta = rng.uniform(-1.9, 4.0), rng.uniform(-1.1, 1.1)
            try:
                s = build_system(SystemSpec("H", "CES", b=b, beta=beta))
                if convergence_ratio(s, 1) > 0.8:
                    continue
                rep = residual_report(s, 1, 10)
            except SwkbLabError:
                continue
            taken += 1
            worst = max(worst, abs(rep.partial_sums[10] - rep.integral) / abs(rep.integral))
    ok = record(6, worst <= 1e-5, f"20 points ({tried} drawn): max |S10 - I|/|I| = {worst:.2e} (tol 1e-5)", clk.seconds, 120)
    assert ok


def test_c07_residual_sign():
    with Clock() as clk:
        delta = {b: residual_report(build_system(SystemSpec("H", "CES", b=b)), 1, 0).delta_numeric for b in (0.5, 1.0, 2.0, -0.5, -1.0)}
    ok = all(delta[b] < 0 for b in (0.5, 1.0, 2.0)) and all(delta[b] > 0 for b in (-0.5, -1.0))
    detail = ", ".join(f"D({b:+g}) = {d:+.3e}" for b, d in delta.items())
    ok = record(7, ok, detail, clk.seconds, 10)
    assert ok


def _real_axis_residues(system, n):
    half = math.sqrt(system.level(n)) + 2.0
    rep = cs.cell_residue_scan(system, n, (-half, half, -0.4, 0.4), (8, 2))
    return [r for z, r in rep.poles if abs(z.imag) < 1e-6]


def test_c08_qhj_exactness():
    cases = [(SystemSpec("H"), 4), (SystemSpec("H", "KA", d=1), 3), (SystemSpec("H", "CES", b=0.1), 2)]
    worst_j, worst_res, nodes_ok = 0.0, 0.0, True
    with Clock() as clk:
        for spec, top in cases:
            s = build_system(spec)
            for n in range(1, top + 1):
                worst_j = max(worst_j, abs(cs.qhj_action(s, n).deviation))
                res = _real_axis_residues(s, n)
                nodes_ok &= len(res) == n
                worst_res = max([worst_res] + [abs(r + 1j) for r in res])
    ok = worst_j <= 1e-7 and worst_res <= 1e-8 and nodes_ok
    detail = f"max |J - n| = {worst_j:.2e} (tol 1e-7), max |res + i| = {worst_res:.2e} (tol 1e-8), node counts ok: {nodes_ok}"
    ok = record(8, ok, detail, clk.seconds, 120)
    assert ok


def _match(found, expected, tol):
    found = list(found)
    if len(found) != len(expected):
        return math.inf
    worst = 0.0
    for z in expected:
        d = min(abs(z - f) for f in found)
        worst = max(worst, d)
    return worst


def test_c09_krein_adler_geometry():
    s = build_system(SystemSpec("H", "KA", d=1))
    region = (-2.0, 2.0, -2.0, 2.0)
    q = math.sqrt
    qmf_poles = [0, 1j / q(2), -1j / q(2), 1j * q(1.5), -1j * q(1.5)]
    int_poles = [1j / q(2), -1j / q(2)]
    branch = [q(1.5), -q(1.5)] + [(sx * q(3) + sy * 1j * q(5)) / (2 * q(2)) for sx in (1, -1) for sy in (1, -1)]
    with Clock() as clk:
        qmf = cs.cell_residue_scan(s, 1, region, (8, 8))
        integ = cs.swkb_integrand_singularities(s, 1, region, (8, 8))
    errs = {
        "QMF poles": _match(qmf.pole_locations(), qmf_poles, 1e-6),
        "integrand poles": _match(integ.pole_locations(), int_poles, 1e-6),
        "branch points": _match(integ.branch_points, branch, 1e-6),
    }
    ok = all(e <= 1e-6 for e in errs.values()) and not qmf.unresolved_cells and not integ.unresolved_cells
    detail = ", ".join(f"{k} err {v:.1e}" for k, v in errs.items())
    ok = record(9, ok, detail + " (tol 1e-6)", clk.seconds, 120)
    assert ok


def test_c10_pairwise_cancellation():
    s = build_system(SystemSpec("H", "CES", b=0.1))
    devs = {}
    with Clock() as clk:
        for R in (3.0, 4.0, 5.0):
            dev, _ = cs.cancellation_check(s, 1, R)
            devs[R] = abs(dev)
    ok = all(d <= 1e-6 for d in devs.values())
    detail = ", ".join(f"R={R:g}: {d:.2e}" for R, d in devs.items())
    ok = record(10, ok, f"|J_R - J_QHJ| {detail} (tol 1e-6)", clk.seconds, 120)
    assert ok


def test_c11_hbar_invariance():
    specs = [
        SystemSpec("H"),
        SystemSpec("H", "CES", b=1.0, beta=0.2),
        SystemSpec("H", "KA", d=1),
        SystemSpec("L", g=1.5),
        SystemSpec("L", "CES", b=0.5, beta=0.1, g=1.2),
        SystemSpec("L", "KA", d=1, g=1.5),
        SystemSpec("J", g=1.5, h=2.0),
        SystemSpec("J", "CES", b=0.5, g=1.5, h=2.0),
        SystemSpec("J", "KA", d=1, g=1.5, h=2.0),
    ]
    with Clock() as clk:
        flags = {f"{sp.variant}-{sp.family}": hbar_invariance_check(sp, (0.5, 1.0, 2.0), rtol=1e-9) for sp in specs}
    bad = [k for k, v in flags.items() if not v]
    ok = record(11, not bad, f"{len(flags) - len(bad)}/{len(flags)} systems invariant (rtol 1e-9)" + (f"; failing {bad}" if bad else ""), clk.seconds, 10)
    assert ok
