import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from swkblab.residual import (
    binomial_half_coeff,
    convergence_ratio,
    domain_map,
    expansion_term,
    residual_report,
)
from swkblab.swkb import swkb_integral
from swkblab.systems import SystemSpec, build_system

# frozen from tests/oracles.py (tanh-sinh of the k-th expansion integrand)
T1_B05 = 0.29538698726260563851
T2_B05 = -0.018425943149051811343


def test_binomial_coefficients():
    assert [binomial_half_coeff(k, exact=True) for k in range(4)] == [1, Fraction(1, 2), Fraction(-1, 8), Fraction(1, 16)]
    assert binomial_half_coeff(5) == pytest.approx(7 / 256)


def test_frozen_terms():
    s = build_system(SystemSpec("H", "CES", b=0.5))
    assert expansion_term(s, 1, 1) == pytest.approx(T1_B05, rel=1e-11)
    assert expansion_term(s, 1, 2) == pytest.approx(T2_B05, rel=1e-10)


@pytest.mark.parametrize(
    "spec",
    [SystemSpec("H", "CES", b=0.3, beta=0.1), SystemSpec("L", "CES", b=0.4, g=1.2), SystemSpec("J", "CES", b=0.5, g=1.5, h=2.0)],
)
def test_leading_term_closed_form_and_series(spec):
    s = build_system(spec)
    rep = residual_report(s, 1, 10)
    assert rep.inside_radius
    assert abs(rep.partial_sums[-1] - rep.integral) <= 1e-6 * rep.integral


def test_exact_point_is_annihilated():
    s = build_system(SystemSpec("H", "CES"))
    assert expansion_term(s, 1, 0) == pytest.approx(math.pi, rel=1e-12)
    assert abs(expansion_term(s, 1, 2)) < 1e-12
    assert convergence_ratio(s, 1) < 1e-6


def test_report_fields():
    s = build_system(SystemSpec("H", "CES", b=1.0))
    rep = residual_report(s, 1, 4)
    assert len(rep.terms) == 5 and rep.delta_series[-1] == pytest.approx(math.pi - rep.partial_sums[-1])
    assert rep.delta_numeric == pytest.approx(math.pi - swkb_integral(s, 1).integral)
    d = rep.as_dict()
    assert d["K"] == 4 and len(d["turning_points"]) == 2


def test_domain_map_labels():
    dm = domain_map(SystemSpec("H", "CES"), 1, [-2.5, 0.0, 3.0], [0.0])
    assert list(dm.labels[0]) == ["invalid", "inside", "outside"]
    assert dm.ratio[0, 1] < 1 < dm.ratio[0, 2]
    assert len(dm.boundary) == 1 and 0 < dm.boundary[0][0] < 3


def test_truncation_error_frozen():
    # mpmath oracle: sum of T_0..T_10 and the direct integral at b=-1.2, beta=0
    s = build_system(SystemSpec("H", "CES", b=-1.2))
    rep = residual_report(s, 1, 10)
    rel = abs(rep.partial_sums[10] - rep.integral) / rep.integral
    assert rel == pytest.approx(2.2253466997893757e-4, rel=1e-8)
    assert rep.integral == pytest.approx(2.6372229616919227344, rel=1e-12)


def test_low_order_partial_sums():
    rep = residual_report(build_system(SystemSpec("H", "CES", b=1.0)), 1, 3)
    assert abs(rep.partial_sums[3] - rep.integral) <= 0.02 * abs(rep.integral)
    rep = residual_report(build_system(SystemSpec("H", "CES", b=0.5, beta=0.5)), 1, 6)
    assert rep.inside_radius and abs(rep.partial_sums[6] - rep.integral) <= 1e-3


@pytest.mark.parametrize("b, beta", [(1.44, 0.0), (0.0, 1.01)])
def test_ratio_near_one_on_the_boundary(b, beta):
    assert convergence_ratio(build_system(SystemSpec("H", "CES", b=b, beta=beta)), 1) == pytest.approx(1.0, abs=0.02)


@settings(max_examples=10, deadline=None)
@given(b=st.floats(-1.0, 1.2), beta=st.floats(-0.7, 0.7))
def test_partial_sum_error_decreases_inside(b, beta):
    s = build_system(SystemSpec("H", "CES", b=b, beta=beta))
    assume(convergence_ratio(s, 1) <= 0.8)
    rep = residual_report(s, 1, 10)
    errs = [abs(v - rep.integral) for v in rep.partial_sums]
    # terms may alternate in sign, so compare K with K + 2
    floor = 1e-12 * rep.integral
    assert all(e2 <= e1 or e2 <= floor for e1, e2 in zip(errs, errs[2:]))
