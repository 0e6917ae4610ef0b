"""Area-preserving diffeomorphisms as flows of divergence-free fields.

Fields are expression-backed so their Jacobians are exact; flows integrate
the point map jointly with the variational equation dJ/dt = DX J by classical
RK4 (default 256 steps per unit time).  A closed-form fast path covers the
shear family on the Mobius band.

The boundary circle of a strip surface lives on the band line ``y = +w``:
the Mobius boundary has length 2 there (top edge, then the bottom edge under
the seam gluing) and is rescaled to a period-1 circle coordinate
``theta = x/2``; the annulus uses its top edge with ``theta = x``.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from . import fieldexpr as fe
from .circle import CircleLift, flow_lift
from .surface import QuotientSurface, SurfaceError

__all__ = [
    "FlowError",
    "TimeDepVectorField",
    "FlowDiffeo",
    "OdeFlow",
    "ExplicitDiffeo",
    "ComposedDiffeo",
    "identity_diffeo",
    "hamiltonian_field",
    "disk_support_mask",
    "localized_hamiltonian",
    "bump_twist_hamiltonian",
    "smooth_twist_hamiltonian",
    "mobius_shear",
    "shear_field",
    "boundary_extension",
    "flow_map",
    "boundary_trace",
    "boundary_circle_point",
    "compose_diffeos",
    "invert_diffeo",
    "DEFAULT_STEPS_PER_UNIT",
]

DEFAULT_STEPS_PER_UNIT = 256


class FlowError(RuntimeError):
    pass


def _arr(v, like) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != np.shape(like):
        v = np.broadcast_to(v, np.shape(like)).copy()
    return v


class TimeDepVectorField:
    """Divergence-free field X(x, y, t) with exact symbolic Jacobian.

    ``support_mask``, when set, is a predicate selecting the (flow-invariant)
    region where the field can be nonzero; flows skip the complement.
    """

    def __init__(self, surface: QuotientSurface, x_comp, y_comp, support: str = "full",
                 support_mask: Optional[Callable] = None):
        self.surface = surface
        self.exprs = (fe.parse(x_comp), fe.parse(y_comp))
        self.support = support
        self.support_mask = support_mask
        self._f = tuple(fe.compiled(e) for e in self.exprs)
        self.jac_exprs = (
            fe.differentiate(self.exprs[0], "x"),
            fe.differentiate(self.exprs[0], "y"),
            fe.differentiate(self.exprs[1], "x"),
            fe.differentiate(self.exprs[1], "y"),
        )
        self._jf = tuple(fe.compiled(e) for e in self.jac_exprs)
        self._rhs = fe.compiled_multi(self.exprs + self.jac_exprs)

    def eval(self, x, y, t):
        return (_arr(self._f[0](x=x, y=y, t=t), x), _arr(self._f[1](x=x, y=y, t=t), x))

    def jacobian(self, x, y, t):
        return tuple(_arr(f(x=x, y=y, t=t), x) for f in self._jf)

    def eval_with_jacobian(self, x, y, t):
        """Field and Jacobian in one fused call (shared subexpressions)."""
        return tuple(_arr(v, x) for v in self._rhs(x=x, y=y, t=t))

    def divergence_error(self, n: int = 24, times=(0.0, 0.37, 1.0)) -> float:
        """Max |dX1/dx + dX2/dy| on a sample grid (exact fields give ~0)."""
        x, y = self._sample_grid(n)
        err = 0.0
        for t in times:
            ux, _, _, vy = self.jacobian(x, y, t)
            err = max(err, float(np.abs(ux + vy).max()))
        return err

    def equivariance_error(self, n: int = 256, times=(0.0, 0.37, 1.0)) -> float:
        """Max seam violation: X1(tau p) = X1(p), X2(tau p) = flip * X2(p)."""
        if not self.surface.is_strip:
            return 0.0
        (xs, ys), (tx, ty) = self.surface.seam_samples(n)
        flip = self.surface.flip
        err = 0.0
        for t in times:
            u0, v0 = self.eval(xs, ys, t)
            u1, v1 = self.eval(tx, ty, t)
            err = max(err, float(np.abs(u1 - u0).max()), float(np.abs(v1 - flip * v0).max()))
        return err

    def boundary_tangency_error(self, n: int = 256, times=(0.0, 0.37, 1.0)) -> float:
        err = 0.0
        if self.surface.is_strip:
            w = self.surface.half_width
            x = np.linspace(0.0, 1.0, n, endpoint=False)
            for t in times:
                for yy in (w, -w):
                    _, v = self.eval(x, np.full(n, yy), t)
                    err = max(err, float(np.abs(v).max()))
            return err
        ang = 2.0 * np.pi * np.arange(n) / n
        cx, sy = np.cos(ang), np.sin(ang)
        for t in times:
            u, v = self.eval(cx, sy, t)
            err = max(err, float(np.abs(u * cx + v * sy).max()))
        return err

    def _sample_grid(self, n: int):
        if self.surface.is_strip:
            w = self.surface.half_width
            x = np.linspace(0.0, 1.0, n)
            y = np.linspace(-w, w, n)
        else:
            x = np.linspace(-0.72, 0.72, n)
            y = np.linspace(-0.72, 0.72, n)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return X.ravel(), Y.ravel()


class FlowDiffeo:
    """Base: area-preserving diffeomorphism with point map and Jacobian."""

    surface: QuotientSurface

    def eval(self, x, y):
        """Return (gx, gy, jac) with jac of shape x.shape + (2, 2)."""
        raise NotImplementedError

    def __call__(self, x, y):
        gx, gy, _ = self.eval(np.asarray(x, float), np.asarray(y, float))
        return gx, gy

    def inverse(self) -> "FlowDiffeo":
        raise NotImplementedError

    def grid(self, n: int = 32):
        if self.surface.is_strip:
            w = self.surface.half_width
            x = np.linspace(0.0, 1.0, n, endpoint=False)
            y = np.linspace(-w, w, n)
        else:
            r = np.linspace(0.05, 0.97, n)
            a = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
            R, A = np.meshgrid(r, a, indexing="ij")
            return (R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()
        X, Y = np.meshgrid(x, y, indexing="ij")
        return X.ravel(), Y.ravel()

    def area_preservation_error(self, n: int = 32) -> float:
        """Max |det Dg - 1| on an n x n sample grid."""
        x, y = self.grid(n)
        _, _, J = self.eval(x, y)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        return float(np.abs(det - 1.0).max())

    def equivariance_error(self, n: int = 128) -> float:
        """Max |g(tau p) - tau(g p)| on seam samples."""
        if not self.surface.is_strip:
            return 0.0
        (xs, ys), (tx, ty) = self.surface.seam_samples(n)
        gx0, gy0 = self(xs, ys)
        ex, ey = self.surface.deck(gx0, gy0)
        gx1, gy1 = self(tx, ty)
        return float(max(np.abs(gx1 - ex).max(), np.abs(gy1 - ey).max()))

    def displacement_on(self, x, y) -> float:
        gx, gy = self(x, y)
        return float(np.hypot(gx - x, gy - y).max())


def _rk4_flow(field, x0, y0, t0: float, t1: float, steps: int):
    """RK4 on dp/dt = X(p, t) and dJ/dt = DX(p, t) J, J(0) = I.

    Points outside the field's support region (when declared) are carried
    through untouched with J = I; the region is flow-invariant, so this is
    exact, not an approximation.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    mask = None
    support = getattr(field, "support_mask", None)
    if support is not None:
        mask = np.asarray(support(x0, y0), bool)
        if mask.all():
            mask = None
    if mask is not None:
        xs, ys, a, b, c, d = _rk4_flow_dense(field, x0[mask], y0[mask], t0, t1, steps)
        full = (x0.copy(), y0.copy(), np.ones_like(x0), np.zeros_like(x0),
                np.zeros_like(x0), np.ones_like(x0))
        for dst, src in zip(full, (xs, ys, a, b, c, d)):
            dst[mask] = src
        return full
    return _rk4_flow_dense(field, x0, y0, t0, t1, steps)


def _rk4_flow_dense(field, x0, y0, t0: float, t1: float, steps: int):
    x = np.array(x0, dtype=float, copy=True)
    y = np.array(y0, dtype=float, copy=True)
    a = np.ones_like(x)   # J = [[a, b], [c, d]]
    b = np.zeros_like(x)
    c = np.zeros_like(x)
    d = np.ones_like(x)
    h = (t1 - t0) / steps
    t = t0
    fused = getattr(field, "eval_with_jacobian", None)

    def rhs(x, y, a, b, c, d, t):
        if fused is not None:
            u, v, ux, uy, vx, vy = fused(x, y, t)
        else:
            u, v = field.eval(x, y, t)
            ux, uy, vx, vy = field.jacobian(x, y, t)
        return (u, v,
                ux * a + uy * c, ux * b + uy * d,
                vx * a + vy * c, vx * b + vy * d)

    state = (x, y, a, b, c, d)
    for _ in range(steps):
        k1 = rhs(*state, t)
        s2 = tuple(s + 0.5 * h * k for s, k in zip(state, k1))
        k2 = rhs(*s2, t + 0.5 * h)
        s3 = tuple(s + 0.5 * h * k for s, k in zip(state, k2))
        k3 = rhs(*s3, t + 0.5 * h)
        s4 = tuple(s + h * k for s, k in zip(state, k3))
        k4 = rhs(*s4, t + h)
        state = tuple(
            s + (h / 6.0) * (u1 + 2.0 * u2 + 2.0 * u3 + u4)
            for s, u1, u2, u3, u4 in zip(state, k1, k2, k3, k4)
        )
        t += h
    return state


def _pack_jac(a, b, c, d):
    J = np.empty(a.shape + (2, 2))
    J[..., 0, 0] = a
    J[..., 0, 1] = b
    J[..., 1, 0] = c
    J[..., 1, 1] = d
    return J


class OdeFlow(FlowDiffeo):
    """Time-(t_end) map of a time-dependent field, with variational Jacobian."""

    def __init__(self, field: TimeDepVectorField, t_end: float = 1.0,
                 steps: Optional[int] = None, _reverse_of: Optional["OdeFlow"] = None):
        self.surface = field.surface
        self.field = field
        self.t_end = float(t_end)
        self.steps = steps if steps is not None else max(1, round(DEFAULT_STEPS_PER_UNIT * abs(t_end)))
        self._reverse_of = _reverse_of

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self._reverse_of is None:
            gx, gy, a, b, c, d = _rk4_flow(self.field, x, y, 0.0, self.t_end, self.steps)
        else:
            # inverse of the forward flow: run the reversed field
            fwd = self._reverse_of
            rev = _TimeReversedField(fwd.field, fwd.t_end)
            gx, gy, a, b, c, d = _rk4_flow(rev, x, y, 0.0, fwd.t_end, fwd.steps)
        if not self.surface.contains(gx, gy, margin=1e-9).all():
            worst = np.argmax(~self.surface.contains(gx, gy, margin=1e-9))
            raise FlowError(
                f"flow trajectory left the surface at ({gx.flat[worst]}, {gy.flat[worst]}); "
                "the field is not tangent or the step count is too small"
            )
        return gx, gy, _pack_jac(a, b, c, d)

    def inverse(self) -> "OdeFlow":
        if self._reverse_of is not None:
            return self._reverse_of
        inv = OdeFlow(self.field, self.t_end, self.steps, _reverse_of=self)
        return inv

    def step_doubling_error(self, n: int = 16) -> float:
        """Grid sup-difference between this flow and one with doubled steps."""
        x, y = self.grid(n)
        gx, gy, _ = self.eval(x, y)
        other = OdeFlow(self.field, self.t_end, 2 * self.steps)
        hx, hy, _ = other.eval(x, y)
        return float(max(np.abs(gx - hx).max(), np.abs(gy - hy).max()))


class _TimeReversedField:
    """X~(p, s) = -X(p, T - s); flows the inverse diffeomorphism."""

    def __init__(self, field: TimeDepVectorField, t_end: float):
        self.surface = field.surface
        self._field = field
        self._T = float(t_end)
        self.support_mask = field.support_mask

    def eval(self, x, y, t):
        u, v = self._field.eval(x, y, self._T - t)
        return -u, -v

    def jacobian(self, x, y, t):
        ux, uy, vx, vy = self._field.jacobian(x, y, self._T - t)
        return -ux, -uy, -vx, -vy

    def eval_with_jacobian(self, x, y, t):
        return tuple(-v for v in self._field.eval_with_jacobian(x, y, self._T - t))


class ExplicitDiffeo(FlowDiffeo):
    """Closed-form diffeomorphism (map, Jacobian, inverse factory)."""

    def __init__(self, surface: QuotientSurface, map_fn, jac_fn, inverse_fn=None, label: str = ""):
        self.surface = surface
        self._map = map_fn
        self._jac = jac_fn
        self._inverse_fn = inverse_fn
        self.label = label

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx, gy = self._map(x, y)
        a, b, c, d = self._jac(x, y)
        return _arr(gx, x), _arr(gy, x), _pack_jac(_arr(a, x), _arr(b, x), _arr(c, x), _arr(d, x))

    def inverse(self) -> "FlowDiffeo":
        if self._inverse_fn is None:
            raise FlowError(f"no closed-form inverse for {self.label or 'explicit diffeo'}")
        return self._inverse_fn()


class ComposedDiffeo(FlowDiffeo):
    """Composition g_1 o g_2 o ... o g_k (rightmost applies first)."""

    def __init__(self, parts: Sequence[FlowDiffeo]):
        if not parts:
            raise FlowError("composition of zero diffeomorphisms")
        self.surface = parts[0].surface
        self.parts = list(parts)

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        J = _pack_jac(np.ones_like(x), np.zeros_like(x), np.zeros_like(x), np.ones_like(x))
        for g in reversed(self.parts):
            x, y, Jg = g.eval(x, y)
            J = Jg @ J
        return x, y, J

    def inverse(self) -> "ComposedDiffeo":
        return ComposedDiffeo([g.inverse() for g in reversed(self.parts)])


def identity_diffeo(surface: QuotientSurface) -> ExplicitDiffeo:
    return ExplicitDiffeo(
        surface,
        lambda x, y: (x, y),
        lambda x, y: (np.ones_like(x), np.zeros_like(x), np.zeros_like(x), np.ones_like(x)),
        None,
        "id",
    )


def compose_diffeos(*diffeos: FlowDiffeo) -> FlowDiffeo:
    """compose_diffeos(g, h) is g o h (h applied first)."""
    flat: list[FlowDiffeo] = []
    for g in diffeos:
        flat.extend(g.parts if isinstance(g, ComposedDiffeo) else [g])
    return flat[0] if len(flat) == 1 else ComposedDiffeo(flat)


def invert_diffeo(g: FlowDiffeo) -> FlowDiffeo:
    return g.inverse()


# ---------------------------------------------------------------------------
# Field constructors
# ---------------------------------------------------------------------------

def hamiltonian_field(
    surface: QuotientSurface,
    hamiltonian,
    cutoff=None,
    support: str = "interior",
    support_mask: Optional[Callable] = None,
    check: bool = True,
) -> TimeDepVectorField:
    """Divergence-free field with i(X) dx^dy = dH:  X = (dH/dy, -dH/dx).

    ``cutoff`` (optional) multiplies H before differentiation; generators
    meant to be supported away from the boundary should vanish near it,
    which is validated through the tangency check.
    """
    H = fe.parse(hamiltonian)
    if cutoff is not None:
        H = fe.BinOp("*", H, fe.parse(cutoff))
    X1 = fe.differentiate(H, "y")
    X2 = fe.Neg(fe.differentiate(H, "x"))
    field = TimeDepVectorField(surface, X1, X2, support, support_mask)
    if check:
        tan = field.boundary_tangency_error()
        if tan > 1e-8:
            raise FlowError(
                f"Hamiltonian field is not tangent to the boundary "
                f"(normal component up to {tan:.3e}); add a cutoff"
            )
    return field


def disk_support_mask(surface: QuotientSurface, cx: float, cy: float, radius: float,
                      pad: float = 1e-12):
    """Support predicate for generators confined to a disk patch.

    On strip kinds the predicate covers the seam translates of the disk so
    masking stays consistent with the field's equivariant extension.
    """
    r2 = (radius + pad) ** 2

    def inside(x, y):
        hit = (x - cx) ** 2 + (y - cy) ** 2 <= r2
        if surface.is_strip:
            s = surface.flip
            for k in (-1, 1):
                hit = hit | ((x + k - cx) ** 2 + (s * y - cy) ** 2 <= r2)
        return hit

    return inside


def localized_hamiltonian(
    surface: QuotientSurface,
    hamiltonian,
    support_mask: Optional[Callable] = None,
    check: bool = True,
) -> TimeDepVectorField:
    """Hamiltonian field of a generator supported inside the fundamental domain.

    A Hamiltonian on the Mobius band is a twisted 0-form, so the local
    expression is extended across the seam with the odd sign (even on the
    annulus); one seam translate suffices because interior-supported flows
    never leave the extended window.
    """
    H0 = fe.parse(hamiltonian)
    if surface.is_strip:
        flip = surface.flip
        image = fe.substitute(
            H0,
            {"x": fe.parse("x - 1"),
             "y": fe.parse("-y") if flip < 0 else fe.Var("y")},
        )
        H = fe.BinOp("-", H0, image) if flip < 0 else fe.BinOp("+", H0, image)
    else:
        H = H0
    return hamiltonian_field(surface, H, support_mask=support_mask, check=check)


def bump_twist_hamiltonian(cx: float, cy: float, radius: float, amplitude: float) -> str:
    """Expression for a radial plateau twist generator in a disk patch.

    The profile is ``a * (r/8) * bump(rho^2 / (4 r^2))``, which keeps the
    generated velocities at scale ``a`` independent of the patch radius.
    """
    s = 4.0 * radius * radius
    amp = amplitude * radius / 8.0
    return f"{amp!r}*bump(((x - {cx!r})^2 + (y - {cy!r})^2)/{s!r})"


def smooth_twist_hamiltonian(cx: float, cy: float, radius: float, amplitude: float) -> str:
    """Radial twist whose profile descends over the whole disk (no plateau).

    Entering the bump transition directly (argument 1/8 at the center)
    spreads all derivatives over the patch radius, which quadrature of
    composed pullbacks repays by orders of magnitude.
    """
    s = 8.0 * radius * radius
    amp = amplitude * radius / 2.83
    return f"{amp!r}*bump(0.125 + ((x - {cx!r})^2 + (y - {cy!r})^2)/{s!r})"


def mobius_shear(surface: QuotientSurface, t: float) -> ExplicitDiffeo:
    """The closed-form shear (x, y) -> (x + t b(y), y) on the Mobius band.

    ``b`` is the even plateau bump, so the map is seam-equivariant, fixes a
    neighborhood of the boundary, and has det D = 1 exactly.
    """
    if surface.kind != "mobius":
        raise SurfaceError("the shear family lives on the Mobius band")
    if surface.half_width < 0.25:
        raise SurfaceError("half_width must be >= 1/4 so the shear fixes the boundary")
    t = float(t)

    def map_fn(x, y):
        return x + t * fe.bump_value(y), y

    def jac_fn(x, y):
        return (np.ones_like(x), t * fe.bump_value(y, 1),
                np.zeros_like(x), np.ones_like(x))

    return ExplicitDiffeo(
        surface, map_fn, jac_fn,
        inverse_fn=lambda: mobius_shear(surface, -t),
        label=f"shear[t={t}]",
    )


def shear_field(surface: QuotientSurface, profile="bump(y)") -> TimeDepVectorField:
    """Horizontal shear field profile(y) d/dx (closed 1-param family)."""
    p = fe.parse(profile)
    return TimeDepVectorField(surface, p, fe.Const(0.0), "full")


# Collar cutoff: plateau 1 up to s = 0.1, smooth descent to 0 at s = 0.95.
# The slow descent keeps the extension field's Lipschitz constant moderate,
# which RK4 repays directly in step count.
DEFAULT_COLLAR_CUTOFF = "bump(0.125 + (x - 0.1)/6.8)"


def boundary_extension(
    surface: QuotientSurface,
    boundary_field,
    collar_depth: Optional[float] = None,
    cutoff: str = DEFAULT_COLLAR_CUTOFF,
    check: bool = True,
) -> TimeDepVectorField:
    """Divergence-free extension of a boundary vector field into a collar.

    ``boundary_field`` is an expression in ``(theta, t)`` giving the angular
    velocity on the boundary circle.  The extension is the Hamiltonian field
    of the potential ``A = s mu(s) g(theta)`` in collar coordinates
    (s = scaled inward depth, mu the cutoff with mu(0) = 1 vanishing at
    s = 1), which is tangent to the boundary, restricts to the given field,
    and is exactly divergence-free.  Strip kinds only; the strip collar is
    the pair of horizontal bands at y = +-w glued across the seam.
    """
    if not surface.is_strip:
        raise SurfaceError("boundary extension is implemented for strip kinds")
    w = surface.half_width
    d = collar_depth if collar_depth is not None else w / 4.0
    if not 0 < d <= w:
        raise SurfaceError("collar depth must lie in (0, half_width]")
    xi = fe.parse(boundary_field)
    mu = fe.parse(cutoff)  # expression in x, evaluated at the collar coordinate

    def collar_term(s_expr_src: str, theta_src: str, sign: float):
        s = fe.parse(s_expr_src)
        mu_s = fe.substitute(mu, {"x": s})
        g = fe.substitute(xi, {"theta": fe.parse(theta_src)})
        return fe.BinOp("*", fe.Const(sign * 2.0 * d), fe.BinOp("*", fe.BinOp("*", s, mu_s), g))

    if surface.kind == "mobius":
        # boundary circle has length 2 on the line y = w: theta = x/2;
        # the bottom band is the odd seam image of the top one.
        top = collar_term(f"({w!r} - y)/{d!r}", "x/2", -1.0)
        bot = collar_term(f"({w!r} + y)/{d!r}", "(x - 1)/2", +1.0)
    else:
        # annulus: drive the top edge (theta = x), keep the bottom edge fixed
        top = collar_term(f"({w!r} - y)/{d!r}", "x", -1.0)
        bot = fe.Const(0.0)
    A = fe.BinOp("+", top, bot)
    band = lambda x, y: np.abs(y) >= w - d - 1e-12
    field = hamiltonian_field(surface, A, support="collar", support_mask=band, check=False)
    if check:
        mu0 = float(fe.evaluate(mu, {"x": 0.0}))
        mu1 = float(fe.evaluate(mu, {"x": 1.0}))
        if abs(mu0 - 1.0) > 1e-12 or abs(mu1) > 1e-9:
            raise FlowError(
                f"collar cutoff must satisfy mu(0) = 1 and mu(1) = 0, got "
                f"mu(0) = {mu0}, mu(1) = {mu1}"
            )
        tan = field.boundary_tangency_error()
        if tan > 1e-9:
            raise FlowError(f"extension failed tangency: |X.n| up to {tan:.3e}")
    return field


def flow_map(field: TimeDepVectorField, t_end: float = 1.0, steps: Optional[int] = None) -> OdeFlow:
    """Time-(t_end) diffeomorphism of the field (RK4, O(h^4) accuracy)."""
    if steps is not None and steps < 1:
        raise FlowError("steps must be >= 1")
    return OdeFlow(field, t_end, steps)


# ---------------------------------------------------------------------------
# Boundary traces
# ---------------------------------------------------------------------------

def boundary_circle_point(surface: QuotientSurface, theta):
    """Band / plane coordinates of the boundary point at circle coordinate theta."""
    theta = np.asarray(theta, dtype=float)
    if surface.kind == "disk":
        ang = 2.0 * np.pi * theta
        return np.cos(ang), np.sin(ang)
    w = surface.half_width
    if surface.kind == "annulus":
        return theta, np.full(theta.shape, w)
    u = 2.0 * theta  # period-2 coordinate along the glued edge pair
    k = np.floor(u / 2.0)
    u0 = u - 2.0 * k
    on_top = u0 < 1.0
    x = np.where(on_top, u0, u0 - 1.0) + 2.0 * k
    y = np.where(on_top, w, -w)
    return x, y


def boundary_trace(g: FlowDiffeo) -> CircleLift:
    """Circle lift of the boundary action of a boundary-preserving diffeo."""
    S = g.surface
    if isinstance(g, ComposedDiffeo):
        lift = None
        for part in reversed(g.parts):
            piece = boundary_trace(part)
            lift = piece if lift is None else _compose_lifts(piece, lift)
        lift.check()
        return lift
    if S.is_strip:
        return _strip_trace(g)
    return _disk_trace(g)


def _compose_lifts(outer: CircleLift, inner: CircleLift) -> CircleLift:
    from .circle import compose as _c
    return _c(outer, inner)


def _strip_trace(g: FlowDiffeo) -> CircleLift:
    S = g.surface
    w = S.half_width
    period = 2.0 if S.kind == "mobius" else 1.0

    def fn(theta):
        theta = np.asarray(theta, dtype=float)
        k = np.floor(theta)
        u = period * (theta - k)
        gx, gy = g(u, np.full(u.shape, w))
        if np.abs(gy - w).max() > 1e-7:
            raise FlowError("boundary edge is not preserved; trace undefined")
        return gx / period + k

    def dfn(theta):
        theta = np.asarray(theta, dtype=float)
        u = period * (theta - np.floor(theta))
        _, _, J = g.eval(u, np.full(u.shape, w))
        return J[..., 0, 0]

    lift = CircleLift(fn, dfn, label="trace")
    lift.check()
    return lift


def _disk_trace(g: FlowDiffeo) -> CircleLift:
    S = g.surface
    if isinstance(g, OdeFlow) and g._reverse_of is None:
        field = g.field

        def velocity(theta, t):
            ang = 2.0 * np.pi * theta
            cx, sy = np.cos(ang), np.sin(ang)
            u, v = field.eval(cx, sy, t)
            return (cx * v - sy * u) / (2.0 * np.pi)

        def velocity_dtheta(theta, t):
            ang = 2.0 * np.pi * theta
            cx, sy = np.cos(ang), np.sin(ang)
            u, v = field.eval(cx, sy, t)
            ux, uy, vx, vy = field.jacobian(cx, sy, t)
            dv = cx * (-vx * sy + vy * cx) - sy * (-ux * sy + uy * cx)
            return dv - (sy * v + cx * u)

        return flow_lift(velocity, velocity_dtheta, g.t_end, g.steps, label="disk trace")
    if isinstance(g, ExplicitDiffeo) and g.label == "id":
        return CircleLift.identity()
    raise FlowError("disk boundary traces are implemented for forward ODE flows")
