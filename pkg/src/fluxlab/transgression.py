"""Transgression of the flux pairing to the boundary Euler cocycle.

For the Mobius band with primitive ``eta`` (d eta = area density) and a
closed ordinary 1-form ``lam``, the 1-cochain

    F(h) = int_N (eta - h^* eta) ^ lam

on area-preserving, boundary-preserving diffeomorphisms restricts to the
flux pairing on boundary-fixing maps, and its group coboundary equals the
Euler cocycle of the boundary traces built from ``phi = i^* eta`` and
``psi = i^* lam``.  The two sides are computed by disjoint pipelines:
2-D quadrature over the band versus 1-D circle quadrature of the traces.

The boundary circle is read along the band line ``y = +w`` with period 2
(top edge, then the bottom edge under the seam gluing), rescaled to a
period-1 coordinate; restrictions of twisted forms pick up the sign of the
global boundary section, fixed so that ``int_{S^1} i^* eta`` equals the
total area.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circle import CircleLift, CircleOneForm, euler_cocycle, DEFAULT_CIRCLE_SPEC
from .flow import FlowDiffeo, boundary_trace, compose_diffeos
from .quadrature import QuadratureSpec, integrate_1d
from .surface import (
    FormField,
    QuotientSurface,
    SurfaceError,
    integrate,
    pullback,
    standard_primitive,
    wedge,
)
from .invariants import flux_lambda

__all__ = [
    "boundary_restriction",
    "flux_cochain",
    "coboundary_flux_cochain",
    "verify_transgression",
    "TransgressionReport",
    "standard_pairing_form",
]


def standard_pairing_form(surface: QuotientSurface) -> FormField:
    """The closed 1-form dx, a generator of first cohomology on strip kinds."""
    return FormField.from_exprs(surface, 1, "even", "1", "0")


def boundary_restriction(surface: QuotientSurface, mu: FormField) -> CircleOneForm:
    """Restrict a 1-form to the boundary circle as ``coeff(theta) dtheta``.

    On the Mobius band the period-2 edge coordinate is rescaled by 1/2, so
    coefficients carry a factor 2; odd (twisted) forms are read through the
    boundary section, which contributes the extra sign that makes
    ``int i^* eta = int omega`` come out positive.
    """
    if mu.degree != 1:
        raise SurfaceError("only 1-forms restrict to boundary 1-forms")
    w = surface.half_width
    sign = -1.0 if mu.parity == "odd" else 1.0
    if surface.kind == "mobius":
        def coeff(theta):
            theta = np.asarray(theta, dtype=float)
            x = 2.0 * theta
            return sign * 2.0 * mu.coeff(0, x, np.full(x.shape, w))
        return CircleOneForm(coeff, label=f"i*({mu.parity} form)")
    if surface.kind == "annulus":
        def coeff(theta):
            theta = np.asarray(theta, dtype=float)
            return mu.coeff(0, theta, np.full(theta.shape, w))
        return CircleOneForm(coeff, label="i* (top edge)")
    # disk: pull back along theta -> (cos 2 pi theta, sin 2 pi theta)
    def coeff(theta):
        theta = np.asarray(theta, dtype=float)
        ang = 2.0 * np.pi * theta
        cx, sy = np.cos(ang), np.sin(ang)
        p = mu.coeff(0, cx, sy)
        q = mu.coeff(1, cx, sy)
        return 2.0 * np.pi * (-p * sy + q * cx)
    return CircleOneForm(coeff, label="i* (disk)")


def flux_cochain(
    surface: QuotientSurface,
    h: FlowDiffeo,
    lam: Optional[FormField] = None,
    eta: Optional[FormField] = None,
    spec: QuadratureSpec | None = None,
    region=None,
) -> float:
    """The 1-cochain F(h) = int (eta - h^* eta) ^ lam on all of G(N).

    For boundary-fixing ``h`` this is literally the flux pairing (the same
    integral); no support requirements are imposed here.  ``region`` may
    restrict quadrature to rectangles carrying supp(eta - h^* eta).
    """
    eta = eta if eta is not None else standard_primitive(surface)
    lam = lam if lam is not None else standard_pairing_form(surface)
    return integrate(surface, wedge(eta - pullback(h, eta), lam), spec, region)


def coboundary_flux_cochain(
    surface: QuotientSurface,
    h1: FlowDiffeo,
    h2: FlowDiffeo,
    lam: Optional[FormField] = None,
    eta: Optional[FormField] = None,
    spec: QuadratureSpec | None = None,
    region=None,
) -> float:
    """F(h1) + F(h2) - F(h1 o h2), evaluated after the exact cancellation.

    Substituting the composed pullback and changing variables (an identity
    for densities on the quotient) turns the three-term difference into

        int (eta - h1^* eta) ^ (lam - (h2^{-1})^* lam),

    which involves only single-flow pullbacks; the literal three-term sum
    carries composed-pullback features that cost far more quadrature for the
    same number.  ``region`` may restrict quadrature to rectangles carrying
    supp(eta - h1^* eta).
    """
    eta = eta if eta is not None else standard_primitive(surface)
    lam = lam if lam is not None else standard_pairing_form(surface)
    nu = eta - pullback(h1, eta)
    dlam = lam - pullback(h2.inverse(), lam)
    return integrate(surface, wedge(nu, dlam), spec, region)


@dataclass(frozen=True)
class TransgressionReport:
    lhs: float                 # delta F (2-D surface pipeline)
    rhs: float                 # Euler cocycle of the traces (1-D pipeline)
    difference: float
    tolerance: float
    passed: bool
    area_total: float          # int_{S^1} i^* eta  (equals the surface area)
    pairing_total: float       # int_{S^1} i^* lam

    def __str__(self) -> str:
        verdict = "ok" if self.passed else "FAIL"
        return (
            f"coboundary {self.lhs:+.9e}  euler cocycle {self.rhs:+.9e}  "
            f"|diff| {self.difference:.2e} <= {self.tolerance:.0e}: {verdict}"
        )


def verify_transgression(
    surface: QuotientSurface,
    h1: FlowDiffeo,
    h2: FlowDiffeo,
    lam: Optional[FormField] = None,
    eta: Optional[FormField] = None,
    spec: QuadratureSpec | None = None,
    circle_spec: QuadratureSpec | None = None,
    tol: float = 2e-5,
    region=None,
) -> TransgressionReport:
    """Check  delta F(h1, h2) = chi(trace h1, trace h2)  on the Mobius band.

    The left side never touches the boundary machinery; the right side never
    touches the surface quadrature.
    """
    if surface.kind != "mobius":
        raise SurfaceError("the transgression identity is verified on the Mobius band")
    eta = eta if eta is not None else standard_primitive(surface)
    lam = lam if lam is not None else standard_pairing_form(surface)

    lhs = coboundary_flux_cochain(surface, h1, h2, lam, eta, spec, region)

    phi = boundary_restriction(surface, eta)
    psi = boundary_restriction(surface, lam)
    g1 = boundary_trace(h1)
    g2 = boundary_trace(h2)
    cspec = circle_spec or DEFAULT_CIRCLE_SPEC
    rhs = euler_cocycle(phi, psi, g1, g2, cspec)

    a_tot = integrate_1d(phi, 0.0, 1.0, cspec)
    b_tot = integrate_1d(psi, 0.0, 1.0, cspec)
    diff = abs(lhs - rhs)
    return TransgressionReport(lhs, rhs, diff, tol, diff <= tol, a_tot, b_tot)
