import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxlab.quadrature import (
    CumulativePrimitive,
    QuadratureError,
    QuadratureSpec,
    integrate_1d,
    integrate_2d,
)


def adaptive_simpson(f, a, b, tol=1e-12, depth=40, force=6):
    """Independent oracle: recursive Simpson with forced initial refinement
    (plain adaptivity can terminate early when probe points hit zeros)."""
    def simpson(a, b):
        m = 0.5 * (a + b)
        return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b)), m

    def rec(a, b, whole, d):
        s_all, m = simpson(a, b)
        left, _ = simpson(a, m)
        right, _ = simpson(m, b)
        forced = d > depth - force
        if d <= 0 or (not forced and abs(left + right - whole) < 15 * tol):
            return left + right + (left + right - whole) / 15.0
        return rec(a, m, left, d - 1) + rec(m, b, right, d - 1)

    whole, _ = simpson(a, b)
    return rec(a, b, whole, depth)


def test_constant_on_unit_interval():
    assert integrate_1d(lambda x: np.ones_like(x)) == pytest.approx(1.0, abs=1e-14)


def test_mean_zero_periodic():
    spec = QuadratureSpec(periodic=True)
    val = integrate_1d(lambda x: np.sin(2 * np.pi * x), 0.0, 1.0, spec)
    assert abs(val) < 1e-14


def test_cubic_exact_at_order_two():
    # antiderivative x^4/4 gives 4 on [0, 2]; order-2 Gauss is exact for cubics
    spec = QuadratureSpec(order=2, panels_x=1)
    assert integrate_1d(lambda x: x ** 3, 0.0, 2.0, spec) == pytest.approx(4.0, abs=1e-13)


@given(st.integers(2, 6), st.lists(st.floats(-3, 3), min_size=1, max_size=8))
@settings(max_examples=60, deadline=None)
def test_polynomial_exactness(order, coeffs):
    # degree <= 2*order - 1 integrates exactly on each panel
    coeffs = coeffs[: 2 * order]
    spec = QuadratureSpec(order=order, panels_x=3)
    val = integrate_1d(lambda x: np.polynomial.polynomial.polyval(x, coeffs), -1.0, 2.0, spec)
    exact = sum(c * (2.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1) for k, c in enumerate(coeffs))
    assert val == pytest.approx(exact, abs=1e-11, rel=1e-11)


def test_unit_square_area_2d():
    spec = QuadratureSpec(order=4, panels_x=2, panels_y=2)
    assert integrate_2d(lambda x, y: np.ones_like(x), (0, 1, -0.5, 0.5), spec) == pytest.approx(1.0)


def test_separable_product_2d():
    val = integrate_2d(lambda x, y: x * y, (0, 1, 0, 1), QuadratureSpec(order=4, panels_x=4, panels_y=4))
    assert val == pytest.approx(0.25, abs=1e-13)


def test_bump_moment_2d_matches_1d_oracle():
    from fluxlab.fieldexpr import bump_value

    spec = QuadratureSpec(order=8, panels_x=8, panels_y=128)
    val2d = integrate_2d(lambda x, y: y * bump_value(y, 1), (0, 1, -0.5, 0.5), spec)
    oracle = adaptive_simpson(lambda y: y * float(bump_value(y, 1)), -0.5, 0.5, tol=1e-13)
    assert val2d == pytest.approx(oracle, abs=1e-9)
    assert oracle == pytest.approx(-0.375, abs=1e-9)  # [y b] - int b = -3/8


def test_refinement_convergence_smooth():
    # |I(2 panels) - I(panels)| decreases and is < 1e-10 by 64 panels
    f = lambda x: np.exp(np.sin(2 * np.pi * x) + 0.3 * np.cos(4 * np.pi * x))
    vals = {p: integrate_1d(f, 0.0, 1.0, QuadratureSpec(order=8, panels_x=p))
            for p in (4, 8, 16, 32, 64, 128)}
    diffs = [abs(vals[2 * p] - vals[p]) for p in (4, 8, 16, 32, 64)]
    assert all(d2 <= d1 + 1e-16 for d1, d2 in zip(diffs, diffs[1:]))
    assert diffs[-1] < 1e-10


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=40, deadline=None)
def test_linearity(alpha, beta):
    spec = QuadratureSpec(order=6, panels_x=4)
    f = lambda x: np.sin(3 * x)
    g = lambda x: x ** 2 - 0.5
    combined = integrate_1d(lambda x: alpha * f(x) + beta * g(x), 0, 1, spec)
    separate = alpha * integrate_1d(f, 0, 1, spec) + beta * integrate_1d(g, 0, 1, spec)
    assert combined == pytest.approx(separate, abs=1e-12)


def test_non_finite_sample_is_reported_with_node():
    with pytest.raises(QuadratureError, match="not finite at node"):
        integrate_1d(lambda x: 1.0 / (x - x[len(x) // 2]), 0.0, 1.0)


def test_invalid_spec_rejected():
    with pytest.raises(QuadratureError):
        QuadratureSpec(order=1)
    with pytest.raises(QuadratureError):
        QuadratureSpec(panels_x=0)


def test_cumulative_primitive_matches_closed_form():
    cum = CumulativePrimitive(lambda x: np.cos(2 * np.pi * x), 0.0, 1.0)
    xs = np.linspace(0.0, 1.0, 77)
    expected = np.sin(2 * np.pi * xs) / (2 * np.pi)
    assert np.abs(cum(xs) - expected).max() < 1e-13
    assert cum.total == pytest.approx(0.0, abs=1e-14)
