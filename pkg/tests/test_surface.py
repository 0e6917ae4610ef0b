import numpy as np
import pytest

from fluxlab import fieldexpr as fe
from fluxlab.quadrature import QuadratureSpec
from fluxlab.surface import (
    ArcData,
    FormField,
    QuotientSurface,
    SurfaceError,
    arc_integral,
    cut_system,
    exterior_derivative,
    integrate,
    poincare_dual,
    pullback,
    standard_area_form,
    standard_primitive,
    wedge,
)
from fluxlab.flow import identity_diffeo, mobius_shear

MOB = QuotientSurface("mobius")
ANN = QuotientSurface("annulus")
DISK = QuotientSurface("disk")


def test_deck_relation_squares_to_translation():
    x = np.linspace(0, 1, 17)
    y = np.linspace(-0.5, 0.5, 17)
    xx, yy = MOB.deck(*MOB.deck(x, y))
    assert np.abs(xx - (x + 2)).max() == 0.0
    assert np.abs(yy - y).max() == 0.0


def test_surface_areas():
    spec = QuadratureSpec(order=6, panels_x=8, panels_y=8)
    assert integrate(MOB, standard_area_form(MOB), spec) == pytest.approx(1.0, abs=1e-10)
    assert integrate(ANN, standard_area_form(ANN), spec) == pytest.approx(1.0, abs=1e-10)
    assert integrate(DISK, standard_area_form(DISK), spec) == pytest.approx(np.pi, abs=1e-10)


def test_area_form_and_primitive_seam_rules():
    assert standard_area_form(MOB).seam_error() < 1e-12
    assert standard_primitive(MOB).seam_error() < 1e-12
    assert standard_primitive(ANN).seam_error() < 1e-12


def test_primitive_differentiates_to_area_form():
    for surf in (MOB, DISK):
        d = exterior_derivative(standard_primitive(surf))
        x = np.linspace(-0.4, 0.9, 23)
        y = np.linspace(-0.45, 0.45, 23)
        assert np.abs(d.coeff(0, x, y) - 1.0).max() < 1e-14


def test_disk_primitive_boundary_integral_is_pi():
    # line integral of (x dy - y dx)/2 around the unit circle
    eta = standard_primitive(DISK)
    theta = np.linspace(0.0, 1.0, 4096, endpoint=False)
    ang = 2 * np.pi * theta
    cx, sy = np.cos(ang), np.sin(ang)
    integrand = (eta.coeff(0, cx, sy) * (-sy) + eta.coeff(1, cx, sy) * cx) * 2 * np.pi
    assert integrand.mean() == pytest.approx(np.pi, abs=1e-12)


def test_wedge_of_coordinate_forms():
    dx = FormField.from_exprs(MOB, 1, "even", "1", "0")
    dy = FormField.from_exprs(MOB, 1, "odd", "0", "1")
    area = wedge(dx, dy)
    assert area.parity == "odd"
    x = np.linspace(0, 1, 9)
    assert np.abs(area.coeff(0, x, x * 0) - 1.0).max() == 0.0
    self_wedge = wedge(dx, dx)
    assert np.abs(self_wedge.coeff(0, x, x * 0)).max() == 0.0


def test_wedge_minus_ydx_with_dy():
    eta = standard_primitive(MOB)
    dy = FormField.from_exprs(MOB, 1, "odd", "0", "1")
    w = wedge(eta, dy)
    x = np.linspace(0, 1, 11)
    y = np.linspace(-0.4, 0.4, 11)
    assert np.abs(w.coeff(0, x, y) - (-y)).max() < 1e-15


def test_wedge_parity_table():
    dx_even = FormField.from_exprs(MOB, 1, "even", "1", "0")
    dy_odd = FormField.from_exprs(MOB, 1, "odd", "0", "1")
    assert wedge(dx_even, dx_even).parity == "even"
    assert wedge(dy_odd, dy_odd).parity == "even"
    assert wedge(dx_even, dy_odd).parity == "odd"


def test_wedge_rejects_wrong_degrees():
    f0 = FormField.from_exprs(MOB, 0, "even", "x")
    dx = FormField.from_exprs(MOB, 1, "even", "1", "0")
    with pytest.raises(SurfaceError):
        wedge(f0, dx)


def test_even_two_form_not_integrable_on_mobius():
    # f(x+1,-y) = -f(x,y) makes the integral depend on the domain choice
    bad = FormField.from_exprs(MOB, 2, "even", "y")
    assert bad.seam_error() < 1e-12
    with pytest.raises(SurfaceError, match="not a density"):
        integrate(MOB, bad)


def test_odd_symmetry_integrates_to_zero():
    # seam rule for odd 2-forms: f(x+1, -y) = f(x, y); sin(pi x) flips sign
    # across the seam and y flips with the deck map, so the product survives
    form = FormField.from_exprs(MOB, 2, "odd", "y*sin(pi*x)")
    assert form.seam_error() < 1e-12
    assert integrate(MOB, form) == pytest.approx(0.0, abs=1e-12)


def test_bump_density_matches_1d_value():
    form = FormField.from_exprs(MOB, 2, "odd", "bump(y)")
    assert integrate(MOB, form) == pytest.approx(0.375, abs=1e-9)


def test_d_squared_vanishes():
    f = FormField.from_exprs(MOB, 0, "odd", "y*sin(2*pi*x) + y^3")
    dd = exterior_derivative(exterior_derivative(f))
    x = np.linspace(0, 1, 33)
    y = np.linspace(-0.5, 0.5, 33)
    assert np.abs(dd.coeff(0, x, y)).max() < 1e-9


def test_exterior_derivative_matches_finite_difference():
    form = FormField.from_exprs(MOB, 1, "odd", "y*sin(2*pi*x)", "y^2*cos(2*pi*x)")
    d = exterior_derivative(form)
    x, y, h = 0.37, 0.21, 1e-5
    curl_fd = ((form.coeff(1, np.array([x + h]), np.array([y]))[0]
                - form.coeff(1, np.array([x - h]), np.array([y]))[0]) / (2 * h)
               - (form.coeff(0, np.array([x]), np.array([y + h]))[0]
                  - form.coeff(0, np.array([x]), np.array([y - h]))[0]) / (2 * h))
    assert d.coeff(0, np.array([x]), np.array([y]))[0] == pytest.approx(curl_fd, abs=1e-6)


def test_pullback_by_identity_and_shift():
    eta = standard_primitive(MOB)
    pb = pullback(identity_diffeo(MOB), eta)
    x = np.linspace(0, 1, 15)
    y = np.linspace(-0.45, 0.45, 15)
    assert np.abs(pb.coeff(0, x, y) - eta.coeff(0, x, y)).max() == 0.0
    # dx is invariant under any horizontal shear
    dx = FormField.from_exprs(MOB, 1, "even", "1", "0")
    pb2 = pullback(mobius_shear(MOB, 0.7), dx)
    assert np.abs(pb2.coeff(0, x, y) - 1.0).max() == 0.0
    assert np.abs(pb2.coeff(1, x, y) - 0.7 * fe.bump_value(y, 1)).max() < 1e-15


def test_pullback_preserves_area_form_for_shear():
    om = standard_area_form(MOB)
    pb = pullback(mobius_shear(MOB, 1.3), om)
    x = np.linspace(0, 1, 21)
    y = np.linspace(-0.5, 0.5, 21)
    assert np.abs(pb.coeff(0, x, y) - 1.0).max() < 1e-15


def test_seam_equivariance_preserved_by_operations():
    eta = standard_primitive(MOB)
    lam = FormField.from_exprs(MOB, 1, "even", "1", "0")
    assert wedge(eta, lam).seam_error() < 1e-12
    assert exterior_derivative(eta).seam_error() < 1e-12
    pb = pullback(mobius_shear(MOB, 0.9), eta)
    pb_field = FormField(MOB, 1, "odd", pb.comps)
    assert pb_field.seam_error() < 1e-12


def test_poincare_dual_normalization_and_pairing():
    arc = cut_system(MOB)[0]
    dual = poincare_dual(MOB, arc)
    # fiber integral across the tube is +-1 after calibration
    s = np.linspace(-arc.epsilon, arc.epsilon, 4001)
    fiber = np.trapezoid(dual.coeff(0, 0.5 + s, 0.0 * s), s)
    assert abs(abs(fiber) - 1.0) < 1e-6
    # pairing against a closed odd probe equals the arc integral
    probe = FormField(
        MOB, 1, "odd",
        (lambda x, y: np.zeros(np.shape(x)), lambda x, y: fe.bump_value(y)),
    )
    lhs = integrate(MOB, wedge(probe, dual))
    rhs = arc_integral(MOB, arc, probe)
    assert lhs == pytest.approx(rhs, abs=1e-6)
    assert rhs == pytest.approx(0.375, abs=1e-9)


def test_poincare_dual_disjoint_support_pairs_to_zero():
    arc = cut_system(MOB)[0]
    dual = poincare_dual(MOB, arc)
    far = FormField(
        MOB, 1, "odd",
        (lambda x, y: np.zeros(np.shape(x)),
         lambda x, y: fe.bump_value((np.mod(x, 1.0) - 0.1) * 2) * fe.bump_value(y)),
    )
    # support x in (0.1 +- 1/8) misses the tube (0.5 +- 1/8) entirely
    assert integrate(MOB, wedge(far, dual)) == pytest.approx(0.0, abs=1e-12)


def test_poincare_dual_is_closed_even_and_equivariant():
    arc = cut_system(MOB)[0]
    dual = poincare_dual(MOB, arc)
    assert dual.parity == "even"
    assert dual.degree == 1
    field = FormField(MOB, 1, "even", dual.comps)
    assert field.seam_error() < 1e-12


def test_dual_tube_must_avoid_seam():
    with pytest.raises(SurfaceError, match="seam"):
        poincare_dual(MOB, ArcData(x0=0.05, epsilon=0.125))


def test_cut_systems():
    assert len(cut_system(MOB)) == 1
    assert len(cut_system(ANN)) == 1
    assert cut_system(DISK) == []
    arc = cut_system(MOB)[0]
    assert arc.x0 == pytest.approx(0.5)
    assert arc.epsilon == pytest.approx(0.125)


def test_arc_endpoints_on_boundary():
    arc = cut_system(MOB)[0]
    x0, y0 = arc.point(np.array(0.0), MOB)
    x1, y1 = arc.point(np.array(1.0), MOB)
    assert float(y0) == pytest.approx(-MOB.half_width)
    assert float(y1) == pytest.approx(MOB.half_width)
