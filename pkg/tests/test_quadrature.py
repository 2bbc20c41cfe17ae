import math

import numpy as np
import pytest

from swkblab.errors import NoTurningPoints, QuadratureError
from swkblab.quadrature import (
    find_turning_points,
    gauss_doubling,
    integrate_sqrt_bracket,
    integrate_sqrt_one_sided,
)


def test_semicircle_area():
    f = lambda t: 4.0 - t**2
    (br,) = find_turning_points(f, (-math.inf, math.inf), limit=10)
    assert br.a_left == pytest.approx(-2, abs=1e-13) and br.a_right == pytest.approx(2, abs=1e-13)
    assert integrate_sqrt_bracket(br) == pytest.approx(2 * math.pi, rel=1e-13)


def test_weighted_bracket():
    # int_0^1 sqrt(t(1-t)) / t dt = pi/2
    f = lambda t: t * (1 - t)
    (br,) = find_turning_points(f, (-1.0, 2.0))
    br.weight = lambda t: 1 / t
    assert integrate_sqrt_bracket(br) == pytest.approx(math.pi / 2, rel=1e-10)


def test_two_brackets_found():
    f = lambda t: -(t**2 - 1) * (t**2 - 4)
    brs = find_turning_points(f, (-3.0, 3.0))
    assert len(brs) == 2


def test_errors():
    with pytest.raises(NoTurningPoints):
        find_turning_points(lambda t: -1 - t**2, (-3.0, 3.0))
    with pytest.raises(QuadratureError):
        find_turning_points(lambda t: 1 - 0 * t, (-3.0, 3.0))


def test_one_sided_and_doubling():
    val = integrate_sqrt_one_sided(lambda t: 1 - t**2, -1.0, 0.0, singular="left")
    assert val == pytest.approx(math.pi / 4, rel=1e-12)
    val, _ = gauss_doubling(np.exp, 0.0, 1.0)
    assert val == pytest.approx(math.e - 1, rel=1e-14)
