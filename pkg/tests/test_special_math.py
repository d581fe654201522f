import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from fluidctl.errors import DomainError, NoConvergence, NoSignChange
from fluidctl.special_math import Interval, RootConfig, exp_integral_e1, solve_monotone_root


def e1_quad(x):
    # E1(x) = int_1^inf exp(-x t) / t dt, an independent definition
    val, _ = integrate.quad(lambda t: math.exp(-x * t) / t, 1.0, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return val


@pytest.mark.parametrize("x", [1e-8, 1e-3, 0.3, 0.999, 1.0, 1.001, 2.5, 10.0, 40.0])
def test_e1_matches_quadrature(x):
    assert exp_integral_e1(x) == pytest.approx(e1_quad(x), rel=1e-11)


def test_e1_known_values():
    assert exp_integral_e1(1.0) == pytest.approx(0.21938393439552027, rel=1e-14)
    assert exp_integral_e1(10.0) == pytest.approx(4.156968929685324e-06, rel=1e-13)


def test_e1_matches_scipy_across_decades():
    x = np.geomspace(1e-12, 650.0, 4001)
    ours = exp_integral_e1(x)
    ref = special.exp1(x)
    mask = ref > 0
    assert np.max(np.abs(ours[mask] / ref[mask] - 1.0)) < 1e-13


def test_e1_small_x_series_identity():
    # E1(x) + gamma + ln x = x - x^2/4 + x^3/18 - x^4/96 + ...
    x = 1e-3
    lhs = exp_integral_e1(x) + np.euler_gamma + math.log(x)
    assert lhs == pytest.approx(x - x * x / 4 + x ** 3 / 18 - x ** 4 / 96, abs=5e-15)


def test_e1_derivative_is_minus_exp_over_x():
    for x in (0.05, 0.9, 1.1, 7.0):
        h = 1e-5 * x
        fd = (exp_integral_e1(x + h) - exp_integral_e1(x - h)) / (2 * h)
        assert fd == pytest.approx(-math.exp(-x) / x, rel=1e-8)


def test_e1_shape_and_scalar():
    assert isinstance(exp_integral_e1(2.0), float)
    out = exp_integral_e1(np.ones((2, 3)))
    assert out.shape == (2, 3)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
def test_e1_domain(bad):
    with pytest.raises(DomainError):
        exp_integral_e1(bad)


def test_e1_underflows_gracefully():
    assert exp_integral_e1(800.0) == 0.0


@given(st.floats(min_value=1e-6, max_value=50.0), st.floats(min_value=1e-6, max_value=50.0))
@settings(max_examples=200, deadline=None)
def test_e1_strictly_decreasing(a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    assert exp_integral_e1(lo) > exp_integral_e1(hi)


def test_root_cube():
    r = solve_monotone_root(lambda x: x ** 3 - 2.0, Interval(0.0, 5.0))
    assert r == pytest.approx(2.0 ** (1 / 3), abs=1e-14)


@given(st.floats(min_value=-0.9, max_value=0.9), st.floats(min_value=0.01, max_value=3.0),
       st.floats(min_value=0.01, max_value=3.0))
@settings(max_examples=100, deadline=None)
def test_root_independent_of_bracket(root, left, right):
    f = lambda x: math.tanh(3 * (x - root))  # noqa: E731
    r = solve_monotone_root(f, Interval(root - left, root + right))
    assert r == pytest.approx(root, abs=1e-13)


def test_root_no_sign_change():
    with pytest.raises(NoSignChange):
        solve_monotone_root(lambda x: x * x + 1, Interval(-1.0, 1.0))


def test_root_budget_exhausted():
    with pytest.raises(NoConvergence) as info:
        solve_monotone_root(lambda x: math.tanh(5 * (x - 0.3)), Interval(0.0, 1.0), RootConfig(abs_tol=1e-15, max_iter=3))
    assert 0.0 < info.value.result < 1.0


def test_interval_validation():
    with pytest.raises(DomainError):
        Interval(1.0, 1.0)
    with pytest.raises(DomainError):
        Interval(0.0, np.inf)
    with pytest.raises(DomainError):
        RootConfig(abs_tol=0.0)
