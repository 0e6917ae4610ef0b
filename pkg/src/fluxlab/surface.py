"""Surfaces with boundary as rectangle quotients, and differential forms on them.

A strip surface is the quotient of the infinite band ``R x [-w, w]`` by the
seam map ``tau(x, y) = (x + 1, flip*y)`` with ``flip = +1`` (annulus) or
``-1`` (Mobius band); the disk is the unit disk in Cartesian coordinates.

Forms are stored through their coefficient functions on the band (one global
chart), tagged ``even`` (ordinary) or ``odd`` (twisted, i.e. carrying the
orientation-line factor).  On the band an odd form is the anti-invariant
representative: ``tau^* nu = flip * nu``.  Componentwise on the Mobius band
(flip = -1) that reads

    degree 0:  f(x+1, -y) = -f(x, y)
    degree 1:  P(x+1, -y) = -P(x, y),   Q(x+1, -y) = Q(x, y)
    degree 2:  f(x+1, -y) =  f(x, y)

and even forms carry the analogous signs without the flip factor.  Odd
2-forms are densities and integrate over the fundamental domain
``[0,1] x [-w, w]``; an even 2-form on the Mobius band has no well-defined
integral and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import fieldexpr as fe
from .quadrature import QuadratureSpec, nodes_1d, nodes_2d

__all__ = [
    "SurfaceError",
    "QuotientSurface",
    "FormField",
    "ArcData",
    "standard_area_form",
    "standard_primitive",
    "wedge",
    "integrate",
    "exterior_derivative",
    "pullback",
    "poincare_dual",
    "cut_system",
    "DEFAULT_SURFACE_SPEC",
]

# 2-D integrals hit bump-scale features; panel edges at k/16 line up with the
# plateau breakpoints of the fixed bump (x: tube around 1/2, y: profile b),
# and 48 y-panels push the bump-derivative quadrature error below 1e-7.
DEFAULT_SURFACE_SPEC = QuadratureSpec(order=8, panels_x=16, panels_y=48)


class SurfaceError(ValueError):
    pass


@dataclass(frozen=True)
class QuotientSurface:
    """Disk, annulus, or Mobius band with its standard area density."""

    kind: str = "mobius"
    half_width: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("disk", "annulus", "mobius"):
            raise SurfaceError(f"unknown surface kind {self.kind!r}")
        if self.kind != "disk" and not 0 < self.half_width:
            raise SurfaceError("half_width must be positive")

    @property
    def is_strip(self) -> bool:
        return self.kind in ("annulus", "mobius")

    @property
    def flip(self) -> int:
        return -1 if self.kind == "mobius" else 1

    @property
    def area(self) -> float:
        return np.pi if self.kind == "disk" else 2.0 * self.half_width

    @property
    def rect(self) -> tuple[float, float, float, float]:
        """Fundamental domain of a strip kind."""
        if not self.is_strip:
            raise SurfaceError("the disk has no strip fundamental domain")
        w = self.half_width
        return (0.0, 1.0, -w, w)

    def deck(self, x, y, k: int = 1):
        """k-th power of the seam map tau."""
        s = self.flip ** (k % 2) if self.flip < 0 else 1
        return x + k, s * y

    def seam_samples(self, n: int = 256):
        """Paired sample points (p, tau(p)) straddling the seam."""
        w = self.half_width
        xs = np.linspace(0.0, 1.0, n, endpoint=False)
        ys = np.linspace(-w, w, n)
        tx, ty = self.deck(xs, ys)
        return (xs, ys), (tx, ty)

    def contains(self, x, y, margin: float = 0.0) -> np.ndarray:
        if self.kind == "disk":
            return x * x + y * y <= (1.0 + margin) ** 2
        return np.abs(y) <= self.half_width + margin


def _component_sign(surface: QuotientSurface, degree: int, parity: str, comp: int) -> int:
    """Sign in coeff(tau(p)) = sign * coeff(p) for one strip component.

    ``comp`` indexes (P, Q) for degree 1 and is ignored otherwise.
    """
    flip = surface.flip
    parity_sign = -1 if parity == "odd" else 1
    base = parity_sign if flip < 0 else 1  # tau^* nu = base * nu
    if degree == 0:
        return base
    if degree == 1:
        # tau^*(P dx + Q dy) = P(tau) dx + flip * Q(tau) dy
        return base if comp == 0 else base * flip
    return base * flip  # degree 2: dx^dy picks up flip


def _as_array(v, like: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != np.shape(like):
        v = np.broadcast_to(v, np.shape(like)).copy()
    return v


class FormField:
    """Degree-0/1/2 form on a surface, given by band-global coefficients.

    Coefficients are vectorized callables ``(x, y) -> array`` (time-frozen);
    when built from expressions the parsed trees are kept so the exterior
    derivative stays exact.
    """

    def __init__(
        self,
        surface: QuotientSurface,
        degree: int,
        parity: str,
        comps: Sequence[Callable],
        exprs: Optional[Sequence[fe.Expr]] = None,
    ):
        if degree not in (0, 1, 2):
            raise SurfaceError(f"form degree must be 0, 1 or 2, got {degree}")
        if parity not in ("even", "odd"):
            raise SurfaceError(f"form parity must be 'even' or 'odd', got {parity!r}")
        n_expected = 2 if degree == 1 else 1
        if len(comps) != n_expected:
            raise SurfaceError(f"degree-{degree} form needs {n_expected} coefficient(s)")
        self.surface = surface
        self.degree = degree
        self.parity = parity
        self.comps = tuple(comps)
        self.exprs = tuple(exprs) if exprs is not None else None

    @classmethod
    def from_exprs(cls, surface, degree, parity, *sources) -> "FormField":
        exprs = tuple(fe.parse(s) for s in sources)
        comps = tuple(fe.compiled(e) for e in exprs)
        wrapped = tuple(
            (lambda f: (lambda x, y: _as_array(f(x=x, y=y), x)))(c) for c in comps
        )
        return cls(surface, degree, parity, wrapped, exprs)

    def coeff(self, i: int, x, y) -> np.ndarray:
        return _as_array(self.comps[i](x, y), x)

    def __add__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        comps = tuple(
            (lambda a, b: (lambda x, y: a(x, y) + b(x, y)))(a, b)
            for a, b in zip(self.comps, other.comps)
        )
        return FormField(self.surface, self.degree, self.parity, comps)

    def __sub__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        comps = tuple(
            (lambda a, b: (lambda x, y: a(x, y) - b(x, y)))(a, b)
            for a, b in zip(self.comps, other.comps)
        )
        return FormField(self.surface, self.degree, self.parity, comps)

    def __mul__(self, c: float) -> "FormField":
        comps = tuple((lambda a: (lambda x, y: float(c) * a(x, y)))(a) for a in self.comps)
        return FormField(self.surface, self.degree, self.parity, comps)

    __rmul__ = __mul__

    def _check_compatible(self, other: "FormField") -> None:
        if self.degree != other.degree or self.parity != other.parity:
            raise SurfaceError(
                f"cannot combine degree-{self.degree} {self.parity} with "
                f"degree-{other.degree} {other.parity} form"
            )

    def seam_error(self, n: int = 256) -> float:
        """Max violation of the seam equivariance rule on sample points."""
        if not self.surface.is_strip:
            return 0.0
        (xs, ys), (tx, ty) = self.surface.seam_samples(n)
        err = 0.0
        for i in range(len(self.comps)):
            s = _component_sign(self.surface, self.degree, self.parity, i)
            err = max(err, float(np.abs(self.coeff(i, tx, ty) - s * self.coeff(i, xs, ys)).max()))
        return err


def standard_area_form(surface: QuotientSurface) -> FormField:
    """The area density: coefficient 1 odd 2-form (dx^dy on the band)."""
    return FormField.from_exprs(surface, 2, "odd", "1")


def standard_primitive(surface: QuotientSurface) -> FormField:
    """An odd 1-form eta with d(eta) equal to the area density.

    Strip kinds use ``-y dx`` (seam-equivariant on both the annulus and the
    Mobius band); the disk uses ``(x dy - y dx)/2``.
    """
    if surface.is_strip:
        return FormField.from_exprs(surface, 1, "odd", "-y", "0")
    return FormField.from_exprs(surface, 1, "odd", "-y/2", "x/2")


def wedge(a: FormField, b: FormField) -> FormField:
    """Wedge of two 1-forms; parity is even iff the parities agree."""
    if a.degree != 1 or b.degree != 1:
        raise SurfaceError("wedge is implemented for pairs of 1-forms")
    if a.surface is not b.surface and a.surface != b.surface:
        raise SurfaceError("wedge operands live on different surfaces")
    parity = "even" if a.parity == b.parity else "odd"

    def coeff(x, y):
        return a.coeff(0, x, y) * b.coeff(1, x, y) - a.coeff(1, x, y) * b.coeff(0, x, y)

    return FormField(a.surface, 2, parity, (coeff,))


def _disk_nodes(spec: QuadratureSpec):
    """Polar-mapped nodes on the unit disk: GL in r, trapezoid in angle."""
    r, wr = nodes_1d(QuadratureSpec(spec.order, spec.panels_y, periodic=False), 0.0, 1.0)
    n_ang = spec.order * spec.panels_x
    ang = 2.0 * np.pi * np.arange(n_ang) / n_ang
    wa = 2.0 * np.pi / n_ang
    R, A = np.meshgrid(r, ang, indexing="ij")
    X = R * np.cos(A)
    Y = R * np.sin(A)
    W = (wr * r)[:, None] * np.full((1, n_ang), wa)
    return X.ravel(), Y.ravel(), W.ravel()


def surface_nodes(surface: QuotientSurface, spec: QuadratureSpec | None = None):
    """Quadrature nodes and weights covering the fundamental domain."""
    spec = spec or DEFAULT_SURFACE_SPEC
    if surface.kind == "disk":
        return _disk_nodes(spec)
    return nodes_2d(spec, surface.rect)


def integrate(
    surface: QuotientSurface,
    form: FormField,
    spec: QuadratureSpec | None = None,
    region: Optional[Sequence[tuple[float, float, float, float]]] = None,
) -> float:
    """Integral of a density (2-form) over the surface.

    On the Mobius band only odd 2-forms have seam-independent integrals;
    even ones are rejected.  ``region`` optionally restricts the quadrature
    to a list of rectangles that carry the integrand's support, spending the
    full panel budget there (exact when the form vanishes off the region).
    """
    if form.degree != 2:
        raise SurfaceError("only 2-forms can be integrated over the surface")
    if surface.kind == "mobius" and form.parity == "even":
        raise SurfaceError(
            "an even 2-form on the Mobius band is not a density; its integral "
            "is not seam-invariant"
        )
    if region is not None:
        total = 0.0
        for rect in region:
            X, Y, W = nodes_2d(spec or DEFAULT_SURFACE_SPEC, rect)
            vals = form.coeff(0, X, Y)
            if not np.isfinite(vals).all():
                raise SurfaceError("2-form coefficient is not finite on the quadrature grid")
            total += float(W @ vals)
        return total
    X, Y, W = surface_nodes(surface, spec)
    vals = form.coeff(0, X, Y)
    if not np.isfinite(vals).all():
        raise SurfaceError("2-form coefficient is not finite on the quadrature grid")
    return float(W @ vals)


def exterior_derivative(form: FormField) -> FormField:
    """Symbolic d; requires expression-backed coefficients. Parity preserved."""
    if form.exprs is None:
        raise SurfaceError("exterior_derivative needs expression-backed coefficients")
    if form.degree == 0:
        dx = fe.differentiate(form.exprs[0], "x")
        dy = fe.differentiate(form.exprs[0], "y")
        return FormField.from_exprs(form.surface, 1, form.parity, dx, dy)
    if form.degree == 1:
        p, q = form.exprs
        curl = fe.BinOp("-", fe.differentiate(q, "x"), fe.differentiate(p, "y"))
        return FormField.from_exprs(form.surface, 2, form.parity, curl)
    raise SurfaceError("d of a 2-form on a surface vanishes; there are no 3-forms")


def pullback(diffeo, form: FormField) -> FormField:
    """Pullback of a form by an equivariant diffeomorphism (map + Jacobian).

    ``diffeo`` must expose ``eval(x, y) -> (gx, gy, jac)`` with ``jac`` of
    shape (..., 2, 2).  The parity is unchanged; coefficients are numeric
    callables (the symbolic trees do not survive composition with a flow).
    """
    # memoize the last node arrays by object identity; holding the references
    # keeps their storage alive, so identity cannot be recycled under us
    cache: dict = {"x": None, "y": None, "val": None}

    def mapped(x, y):
        if cache["x"] is not x or cache["y"] is not y:
            cache["val"] = diffeo.eval(x, y)
            cache["x"], cache["y"] = x, y
        return cache["val"]

    if form.degree == 0:
        def f0(x, y):
            gx, gy, _ = mapped(x, y)
            return form.coeff(0, gx, gy)
        return FormField(form.surface, 0, form.parity, (f0,))

    if form.degree == 1:
        def p1(x, y):
            gx, gy, J = mapped(x, y)
            return (form.coeff(0, gx, gy) * J[..., 0, 0]
                    + form.coeff(1, gx, gy) * J[..., 1, 0])

        def q1(x, y):
            gx, gy, J = mapped(x, y)
            return (form.coeff(0, gx, gy) * J[..., 0, 1]
                    + form.coeff(1, gx, gy) * J[..., 1, 1])

        return FormField(form.surface, 1, form.parity, (p1, q1))

    def f2(x, y):
        gx, gy, J = mapped(x, y)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        return form.coeff(0, gx, gy) * det

    return FormField(form.surface, 2, form.parity, (f2,))


# ---------------------------------------------------------------------------
# Arcs, their tubular-neighborhood duals, and cut systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArcData:
    """Properly embedded vertical arc ``x = x0`` on a strip surface.

    ``orientation=+1`` runs bottom to top.  The transverse profile is the
    plateau bump rescaled to ``[-epsilon, epsilon]`` and normalized to unit
    mass; cut systems on the annulus and Mobius band only ever need vertical
    arcs, which keep the tube coordinates globally flat.
    """

    x0: float = 0.5
    orientation: int = 1
    epsilon: float = 0.125

    def __post_init__(self) -> None:
        if self.orientation not in (-1, 1):
            raise SurfaceError("arc orientation must be +1 or -1")
        if not 0 < self.epsilon < 0.5:
            raise SurfaceError("tube half-width must lie in (0, 1/2)")

    def point(self, t, surface: QuotientSurface):
        w = surface.half_width
        t = np.asarray(t, dtype=float)
        y = (-w + 2.0 * w * t) if self.orientation > 0 else (w - 2.0 * w * t)
        return np.broadcast_to(self.x0, y.shape).copy(), y

    def velocity(self, t, surface: QuotientSurface):
        w = surface.half_width
        t = np.asarray(t, dtype=float)
        vy = np.full(t.shape, 2.0 * w * self.orientation)
        return np.zeros(t.shape), vy

    def profile(self, s):
        """Transverse bump with unit fiber integral, supported in |s| <= eps."""
        scale = 4.0 * self.epsilon
        mass = 0.375 * scale  # integral of the plateau bump is 3/8
        return fe.bump_value(np.asarray(s, dtype=float) / scale) / mass


def arc_integral(surface: QuotientSurface, arc: ArcData, form: FormField,
                 spec: QuadratureSpec | None = None) -> float:
    """Line integral of a 1-form along the arc (in the band chart)."""
    spec = spec or QuadratureSpec(order=8, panels_x=32)
    t, wt = nodes_1d(QuadratureSpec(spec.order, spec.panels_x), 0.0, 1.0)
    x, y = arc.point(t, surface)
    vx, vy = arc.velocity(t, surface)
    vals = form.coeff(0, x, y) * vx + form.coeff(1, x, y) * vy
    return float(wt @ vals)


def poincare_dual(
    surface: QuotientSurface,
    arc: ArcData,
    spec: QuadratureSpec | None = None,
    return_sign: bool = False,
):
    """Closed even 1-form concentrated in the arc's tube, dual to the arc.

    The transverse Thom bump is periodized across the seam and the overall
    sign is calibrated on a probe density so that the pairing
    ``int_F mu ^ dual  =  int_arc mu`` holds with the positive sign
    (a well-arranged triple).
    """
    if not surface.is_strip:
        raise SurfaceError("Poincare duals of arcs are defined on strip kinds")
    eps = arc.epsilon
    if arc.x0 - eps <= 0.0 or arc.x0 + eps >= 1.0:
        raise SurfaceError(
            f"tube of half-width {eps} around x={arc.x0} crosses the seam; "
            "move the arc or shrink the tube"
        )

    def transverse(x, y):
        s = (x - arc.x0 + 0.5) % 1.0 - 0.5  # periodized offset from the arc
        return arc.profile(s)

    candidate = FormField(surface, 1, "even", (transverse, lambda x, y: np.zeros(np.shape(x))))

    # probe: odd, closed, vanishing boundary trace, nonzero arc integral
    w = surface.half_width
    probe = FormField(
        surface, 1, "odd",
        (lambda x, y: np.zeros(np.shape(x)), lambda x, y: fe.bump_value(y / (2.0 * w))),
    )
    pairing = integrate(surface, wedge(probe, candidate), spec)
    direct = arc_integral(surface, arc, probe)
    sign = 1 if pairing * direct > 0 else -1
    dual = candidate if sign == 1 else (-1.0) * candidate
    return (dual, sign) if return_sign else dual


def cut_system(surface: QuotientSurface) -> list[ArcData]:
    """Arcs whose duals span first cohomology: one vertical arc on a strip,
    none on the disk."""
    if surface.kind == "disk":
        return []
    return [ArcData(x0=0.5, orientation=1, epsilon=0.125)]
