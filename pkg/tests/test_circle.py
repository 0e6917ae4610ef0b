import numpy as np
import pytest

from fluxlab import circle as ci
from fluxlab.quadrature import QuadratureSpec

GRID = np.linspace(0.0, 1.0, 100)


@pytest.fixture(scope="module")
def nonlinear_lift():
    return ci.CircleLift.from_expr("theta + 0.3 + 0.1*sin(2*pi*theta)")


def test_rotation_composition():
    f = ci.compose(ci.CircleLift.rotation(0.2), ci.CircleLift.rotation(0.5))
    assert np.abs(f(GRID) - (GRID + 0.7)).max() < 1e-15


def test_compose_with_identity(nonlinear_lift):
    f = ci.compose(nonlinear_lift, ci.CircleLift.identity())
    assert np.abs(f(GRID) - nonlinear_lift(GRID)).max() == 0.0


def test_compose_with_inverse_is_identity(nonlinear_lift):
    # Newton-solved inverse: f o f^-1 = id to well below 1e-8 sup-norm
    g = ci.invert(nonlinear_lift)
    assert np.abs(ci.compose(nonlinear_lift, g)(GRID) - GRID).max() < 1e-8
    assert np.abs(ci.compose(g, nonlinear_lift)(GRID) - GRID).max() < 1e-8


def test_invert_rotation():
    g = ci.invert(ci.CircleLift.rotation(0.37))
    assert np.abs(g(GRID) - (GRID - 0.37)).max() < 1e-11
    gid = ci.invert(ci.CircleLift.identity())
    assert np.abs(gid(GRID) - GRID).max() < 1e-11


def test_lift_validation():
    with pytest.raises(ci.LiftError, match="not equivariant"):
        ci.CircleLift.from_expr("theta + 0.3*theta")
    with pytest.raises(ci.LiftError, match="not increasing"):
        ci.CircleLift.from_expr("theta + 0.5*sin(2*pi*theta)")


def test_translation_number_of_rotation():
    assert ci.translation_number(ci.CircleLift.rotation(0.37), 100) == pytest.approx(0.37)
    assert ci.translation_number(ci.CircleLift.rotation(1.0), 50) == pytest.approx(1.0)


def test_translation_number_stabilizes(nonlinear_lift):
    r1 = ci.translation_number(nonlinear_lift, 10 ** 5)
    r2 = ci.translation_number(nonlinear_lift, 2 * 10 ** 5)
    assert abs(r1 - r2) < 1e-4


def test_rotation_cocycle_half_rotations():
    val = ci.rotation_cocycle(ci.CircleLift.rotation(0.5), ci.CircleLift.rotation(0.5), 1000)
    # rot 0.5 + rot 0.5 - rot 1.0 on normalized lifts
    assert val.value == 0
    assert val.residual < 1e-12


def test_rotation_cocycle_identity_pair(nonlinear_lift):
    val = ci.rotation_cocycle(ci.CircleLift.identity(), nonlinear_lift, 2000)
    assert val.value == 0
    assert val.residual < 2e-3


def test_rotation_cocycle_commuting_pair_is_integral():
    rng = np.random.default_rng(5)
    base = ci.random_lift(rng, strength=0.5)
    f2 = ci.compose(base, base)
    val = ci.rotation_cocycle(base, f2, 10 ** 5)
    assert val.residual < 1e-4


PHI = ci.CircleOneForm.from_expr("1 + 0.5*cos(2*pi*theta)")
PSI = ci.CircleOneForm.from_expr("2 - sin(2*pi*theta)")


def test_euler_cocycle_identity_argument_vanishes():
    rng = np.random.default_rng(0)
    g = ci.random_lift(rng)
    e = ci.CircleLift.identity()
    assert ci.euler_cocycle(PHI, PSI, e, g) == 0.0
    assert abs(ci.euler_cocycle(PHI, PSI, g, e)) < 1e-15


def test_euler_cocycle_rotations_with_constant_form():
    phi = ci.CircleOneForm.constant(1.0)
    psi = ci.CircleOneForm.constant(1.0)
    val = ci.euler_cocycle(phi, psi, ci.CircleLift.rotation(0.3), ci.CircleLift.rotation(0.8))
    assert abs(val) < 1e-14  # the primitive of a constant form is affine


def test_euler_equals_coboundary_route():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g1, g2 = ci.random_lift(rng), ci.random_lift(rng)
        chi = ci.euler_cocycle(PHI, PSI, g1, g2)
        cf = ci.coboundary_cocycle(PHI, PSI, g1, g2)
        assert abs(chi - cf) < 1e-8


def test_coboundary_route_is_lift_independent():
    rng = np.random.default_rng(2)
    g1, g2 = ci.random_lift(rng), ci.random_lift(rng)
    v0 = ci.coboundary_cocycle(PHI, PSI, g1, g2)
    v1 = ci.coboundary_cocycle(PHI, PSI, g1.shifted(1), g2)
    v2 = ci.coboundary_cocycle(PHI, PSI, g1, g2.shifted(-2))
    assert abs(v0 - v1) < 1e-9
    assert abs(v0 - v2) < 1e-9


def test_cocycle_condition_random_triples():
    rng = np.random.default_rng(3)
    chi = lambda a, b: ci.euler_cocycle(PHI, PSI, a, b)
    for _ in range(10):
        a, b, c = (ci.random_lift(rng) for _ in range(3))
        res = (chi(b, c) - chi(ci.compose(a, b), c)
               + chi(a, ci.compose(b, c)) - chi(a, b))
        assert abs(res) < 1e-7


def test_primitive_shift_invariance():
    # adding a constant to the normalized primitive leaves chi unchanged
    rng = np.random.default_rng(4)
    g1, g2 = ci.random_lift(rng), ci.random_lift(rng)
    spec = ci.DEFAULT_CIRCLE_SPEC
    base = ci.euler_cocycle(PHI, PSI, g1, g2, spec)

    from fluxlab.quadrature import nodes_1d
    theta, w = nodes_1d(spec, 0.0, 1.0)
    Phi = ci.CirclePrimitive(PHI, spec)
    c0 = Phi(float(g1(0.0)))
    for const in (0.0, 2.7):
        beta = lambda t: Phi(t) - Phi(g1(t)) + c0 + const
        val = float(w @ ((beta(theta) - beta(g2(theta))) * PSI(theta)))
        assert val == pytest.approx(base, abs=1e-12)


def test_group_coboundary_formula():
    k = 1.25
    const = lambda f: k
    g1, g2 = ci.CircleLift.rotation(0.2), ci.CircleLift.rotation(0.4)
    assert ci.group_coboundary(const, g1, g2) == pytest.approx(k)
    hom = lambda f: f(0.0)  # additive on rotations
    assert ci.group_coboundary(hom, g1, g2) == pytest.approx(0.0)


def test_flow_lift_matches_rotation():
    lift = ci.flow_lift(lambda th, t: np.full(np.shape(th), 0.3),
                        lambda th, t: np.zeros(np.shape(th)), 1.0, 64)
    assert np.abs(lift(GRID) - (GRID + 0.3)).max() < 1e-12
    assert np.abs(lift.deriv(GRID) - 1.0).max() < 1e-12
