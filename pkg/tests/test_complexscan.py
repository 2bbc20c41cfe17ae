import math

import numpy as np
import pytest

from swkblab import complexscan as cs
from swkblab.systems import SystemSpec, build_system

# frozen from tests/oracles.py (QMF of the intertwined oscillator state, 40 digits)
P_REF = complex(-2.0233379948265002465, -0.87353398971467837788)


def test_qmf_frozen(ces_h01):
    assert abs(cs.qmf_eval(ces_h01, 1, 0.3 + 0.4j) - P_REF) < 1e-12


def test_winding_counts_zeros():
    f = lambda z, order=1: [(z - 0.2j) * (z + 1.1), 2 * z + 1.1 - 0.2j][: order + 1]
    assert cs.winding(f, (-0.5, 0.5, -0.5, 0.5)) == 1
    assert cs.winding(f, (-2, 2, -2, 2)) == 2
    assert cs.winding(f, (1, 2, 1, 2)) == 0


def test_find_zeros_polynomial():
    roots = [0.3 + 0.1j, -0.7 - 0.4j, 1.2j]
    f = lambda z, order=1: [np.prod([z - r for r in roots], axis=0), sum(np.prod([z - q for q in roots if q is not r], axis=0) for r in roots)][: order + 1]
    found, unresolved = cs.find_zeros(f, (-1.5, 1.5, -1.5, 1.5))
    assert not unresolved
    assert all(m == 1 for _, m in found)
    found = [z for z, _ in found]
    assert sorted(found, key=lambda z: (z.real, z.imag)) == pytest.approx(sorted(roots, key=lambda z: (z.real, z.imag)), abs=1e-10)


def test_integrate_segment():
    val = cs.integrate_segment(lambda z: 1 / z, 1 + 0j, 1j)
    assert val == pytest.approx(1j * math.pi / 2, abs=1e-11)


def test_real_axis_residues_ka(ka_h):
    rep = cs.cell_residue_scan(ka_h, 2, (-3, 3, -0.5, 0.5), (6, 4))
    real = [(z, r) for z, r in rep.poles if abs(z.imag) < 1e-8 and abs(r + 1j) < 1e-6]
    assert len(real) == 2  # n = 2 has two nodes


def test_qhj_exact_si(si_h):
    for n in (1, 3):
        assert abs(cs.qhj_action(si_h, n).deviation) < 1e-8


def test_qhj_residual(si_h, ka_h):
    assert cs.qhj_residual_check(si_h, 2, cs.default_qhj_grid(si_h, 2)) < 1e-8
    assert cs.qhj_residual_check(ka_h, 1, cs.default_qhj_grid(ka_h, 1)) < 1e-8


@pytest.mark.parametrize("R", [3.0, 3.51, 3.946])
def test_cancellation_at_clean_radii(ces_h01, R):
    # squares whose edges fall between the complex pole pairs
    dev, _ = cs.cancellation_check(ces_h01, 1, R)
    assert abs(dev) <= 1e-6
