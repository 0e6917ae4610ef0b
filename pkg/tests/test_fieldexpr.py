import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxlab import fieldexpr as fe

ROUNDTRIP_CORPUS = [
    "x + 2*y",
    "sin(2*pi*theta)",
    "x*y - t",
    "x^2 + y^2",
    "-x^2 + 3*(y - 1)",
    "bump(y)",
    "dbump(x/4)",
    "exp(-x)*cos(y)",
    "1/(1 + x^2)",
    "x/y/2",
    "x - y - t",
    "x - (y - t)",
    "2^3^2",
    "(x + y)^2",
    "x*-y",
    "-(x + y)",
    "0.5*bump((x - 0.25)^2 + y^2)",
    "pi*x",
    "sin(cos(exp(x)))",
    "x + y*t*theta",
    "0.001*x + 250.0",
    "x^-2",
    "(x - 1)/(y + 1)",
    "bump(0.125 + x/6.8)",
    "theta + 0.3 + 0.1*sin(2*pi*theta)",
] + [f"x^{k} + {k}*y" for k in range(2, 12)] + [
    f"sin({k}*x) - cos({k}*y)" for k in range(1, 16)
]


def test_scientific_notation_literals():
    assert fe.evaluate(fe.parse("1e-3*x + 2.5E2"), {"x": 2.0}) == pytest.approx(250.002)


def test_basic_values():
    assert fe.evaluate(fe.parse("x + 2*y"), {"x": 1.0, "y": 2.0}) == pytest.approx(5.0)
    assert fe.evaluate(fe.parse("sin(2*pi*theta)"), {"theta": 0.25}) == pytest.approx(1.0)
    assert fe.evaluate(fe.parse("bump(y)"), {"y": 0.0}) == pytest.approx(1.0)
    for y in (0.25, 0.3, -0.9):
        assert fe.evaluate(fe.parse("bump(y)"), {"y": y}) == 0.0


def test_precedence_and_unary_minus():
    assert fe.evaluate(fe.parse("-x^2"), {"x": 3.0}) == pytest.approx(-9.0)
    assert fe.evaluate(fe.parse("2^3^2"), {}) == pytest.approx(512.0)
    assert fe.evaluate(fe.parse("x - y - t"), {"x": 10, "y": 3, "t": 2}) == pytest.approx(5.0)
    assert fe.evaluate(fe.parse("x/y/2"), {"x": 8, "y": 2}) == pytest.approx(2.0)


def test_syntax_error_reports_offset():
    with pytest.raises(fe.ParseError, match="offset 4"):
        fe.parse("x + * y")


def test_unknown_identifier_rejected():
    with pytest.raises(fe.ParseError, match="unknown identifier 'z'"):
        fe.parse("x + z")
    with pytest.raises(fe.ParseError, match="unknown identifier"):
        fe.parse("foo(x)")


def test_missing_paren_reports_expected_token():
    with pytest.raises(fe.ParseError, match=r"expected '\)'"):
        fe.parse("sin(x")


@pytest.mark.parametrize("src", ROUNDTRIP_CORPUS)
def test_print_parse_roundtrip(src):
    # pretty-print after parse is the identity up to whitespace
    printed = fe.to_str(fe.parse(src))
    assert printed.replace(" ", "") == src.replace(" ", "")
    # and printing is stable under a second round trip
    assert fe.to_str(fe.parse(printed)) == printed


def test_simple_derivatives():
    assert fe.to_str(fe.differentiate(fe.parse("x^2"), "x")) == "2*x"
    d = fe.differentiate(fe.parse("sin(2*pi*theta)"), "theta")
    assert fe.evaluate(d, {"theta": 0.0}) == pytest.approx(2 * math.pi)
    assert fe.to_str(fe.differentiate(fe.parse("bump(y)"), "y")) == "dbump(y)"


def _finite_difference(expr, var, point, step=1e-5):
    hi = dict(point)
    lo = dict(point)
    hi[var] = point[var] + step
    lo[var] = point[var] - step
    return (fe.evaluate(expr, hi) - fe.evaluate(expr, lo)) / (2 * step)


@given(st.floats(-0.9, 0.9), st.floats(-0.45, 0.45), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_derivative_matches_finite_difference(x, y, t):
    corpus = ["x^2*y + sin(2*pi*x)", "bump(y)*x", "exp(x*y) - t*cos(x)",
              "bump(x^2 + y^2)", "x/(2 + y)"]
    point = {"x": x, "y": y, "t": t, "theta": 0.1}
    for src in corpus:
        e = fe.parse(src)
        for var in ("x", "y"):
            exact = fe.evaluate(fe.differentiate(e, var), point)
            approx = _finite_difference(e, var, point)
            assert exact == pytest.approx(approx, abs=2e-5, rel=1e-6)


def test_bump_derivative_at_transition_point():
    # closed form: the transition is symmetric, so bump(3/16) = 1/2 and the
    # slope there is -16 (chain rule through u = 8|y| - 1 at u = 1/2)
    assert fe.bump_value(0.1875) == pytest.approx(0.5, abs=1e-14)
    assert fe.bump_value(0.1875, 1) == pytest.approx(-16.0, abs=1e-10)
    fd = (fe.bump_value(0.1875 + 1e-6) - fe.bump_value(0.1875 - 1e-6)) / 2e-6
    assert fe.bump_value(0.1875, 1) == pytest.approx(fd, abs=1e-5)


def test_bump_higher_derivatives_consistent():
    ys = np.linspace(0.126, 0.249, 301)
    for k in (1, 2, 3):
        fd = (fe.bump_value(ys + 1e-6, k - 1) - fe.bump_value(ys - 1e-6, k - 1)) / 2e-6
        assert np.abs(fe.bump_value(ys, k) - fd).max() < 5e-3 * max(np.abs(fd).max(), 1.0)


def test_bump_mass_is_three_eighths():
    # plateau of width 1/4 plus two symmetric half-mass transitions of 1/8
    from fluxlab.quadrature import QuadratureSpec, integrate_1d
    val = integrate_1d(lambda y: fe.bump_value(y), -0.5, 0.5,
                       QuadratureSpec(order=8, panels_x=128))
    assert val == pytest.approx(0.375, abs=1e-12)


def test_substitute():
    e = fe.parse("bump(x) + y")
    s = fe.substitute(e, {"x": fe.parse("2*theta"), "y": fe.parse("t^2")})
    assert fe.evaluate(s, {"theta": 0.05, "t": 3.0}) == pytest.approx(
        float(fe.bump_value(0.1)) + 9.0)


def test_compiled_matches_tree_eval():
    e = fe.parse("bump(y)*sin(2*pi*x) + x^2/(1 + t)")
    f = fe.compiled(e)
    xs = np.linspace(-1, 1, 41)
    ys = np.linspace(-0.5, 0.5, 41)
    tree = fe.evaluate(e, {"x": xs, "y": ys, "t": 0.3})
    fast = f(x=xs, y=ys, t=0.3)
    assert np.abs(tree - fast).max() < 1e-15
    g = fe.compiled_scalar(e)
    assert g(x=0.3, y=0.1, t=0.3) == pytest.approx(float(fe.evaluate(e, {"x": 0.3, "y": 0.1, "t": 0.3})))


def test_compiled_multi_shares_subexpressions():
    exprs = [fe.parse("bump(x)*y"), fe.differentiate(fe.parse("bump(x)*y"), "x")]
    multi = fe.compiled_multi(exprs)
    a, b = multi(x=0.2, y=3.0)
    assert a == pytest.approx(float(fe.bump_value(0.2)) * 3.0)
    assert b == pytest.approx(float(fe.bump_value(0.2, 1)) * 3.0)


def test_constant_exponent_restriction():
    with pytest.raises(fe.EvalError, match="constant exponents"):
        fe.differentiate(fe.parse("x^y"), "x")
