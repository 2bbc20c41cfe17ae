import math

import numpy as np
import pytest

from swkblab.errors import ConstraintViolation, UnsupportedCombination
from swkblab.systems import SystemSpec, breve_index, build_system

# frozen from tests/oracles.py
U_CESH = 1.4128622493600879053  # u(0.7), b=1, beta=0.3
W_CESH = 0.89604503967183748906  # W(0.5), b=1, beta=0
KA_PSI_RATIO = 16.9361195697681621727  # e^{-x^2/2} W[H1,H2,H3]/W[H1,H2] at 0.9


def test_ces_h_u_and_superpotential():
    s = build_system(SystemSpec("H", "CES", b=1.0, beta=0.3))
    assert s.u_function(0.7)[0] == pytest.approx(U_CESH, rel=1e-14)
    s0 = build_system(SystemSpec("H", "CES", b=1.0))
    assert s0.superpotential_w(0.5) == pytest.approx(W_CESH, rel=1e-14)


def test_ka_wavefunction_is_wronskian_ratio(ka_h):
    x = np.array([0.3, 0.9, -1.4])
    closed = np.exp(-x**2 / 2) * (128 * x**3 + 192 * x) / (8 * x**2 + 4)
    vals = ka_h.wavefunction(1, x)
    ratio = vals / closed
    assert np.allclose(ratio, ratio[0], rtol=1e-13)
    assert ka_h.wavefunction(1, 0.9) == pytest.approx(KA_PSI_RATIO, rel=1e-12)


def test_breve_index():
    assert [breve_index(n, 1) for n in range(4)] == [0, 3, 4, 5]
    assert [breve_index(n, 2) for n in range(4)] == [0, 1, 4, 5]


def test_levels_and_energies():
    h = build_system(SystemSpec("H", hbar=2.0, omega=0.5))
    assert h.level(3) == 6 and h.energy(3) == pytest.approx(6.0)
    ces = build_system(SystemSpec("H", "CES", b=0.7))
    assert ces.level(0) == 0 and ces.level(2) == pytest.approx(4.7)
    lag = build_system(SystemSpec("L", "CES", b=0.8, g=1.2))
    assert lag.level(1) == pytest.approx(1.2)
    jac = build_system(SystemSpec("J", g=1.0, h=2.5))
    assert jac.level(2) == pytest.approx(4 * 2 * (2 + 3.5))
    ka = build_system(SystemSpec("H", "KA", d=1))
    assert ka.level(1) == 6


@pytest.mark.parametrize(
    "spec",
    [
        SystemSpec("H", "CES", b=-3.0),
        SystemSpec("H", "CES", b=0.0, beta=1.2),
        SystemSpec("L", "SI", g=-0.5),
        SystemSpec("H", "KA", d=0),
        SystemSpec("H", hbar=-1.0),
    ],
)
def test_constraint_violations(spec):
    with pytest.raises((ConstraintViolation, UnsupportedCombination)):
        build_system(spec)


def test_superpotential_generates_potential(si_h):
    # V = W^2 - W' reproduces the oscillator x^2 - 1 in natural units
    x = np.linspace(-2, 2, 9)
    assert np.allclose(si_h.potential_x(x), x**2 - 1, atol=1e-12)


@pytest.mark.parametrize("spec", [SystemSpec("L", "CES", b=0.6, beta=0.1, g=1.2), SystemSpec("J", "CES", b=0.5, g=1.5, h=2.0)])
def test_ground_state_annihilated_by_a(spec):
    # W = -(ln psi0)' in x; check by finite difference on the physical coordinate
    s = build_system(spec)
    lo, hi = s.coords.x_domain()
    hi = min(hi, 3.0)
    x = np.linspace(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo), 5)
    h = 1e-5
    t = lambda xx: s.coords.t_of_x(xx)[0]
    lnpsi = lambda xx: np.log(np.abs(s.wavefunction(0, t(xx))))
    fd = -(lnpsi(x + h) - lnpsi(x - h)) / (2 * h)
    assert np.allclose(s.superpotential_x(x), fd, rtol=1e-6, atol=1e-8)
