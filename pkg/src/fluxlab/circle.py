"""Circle diffeomorphisms via lifts, translation numbers, and Euler cocycles.

A lift is a strictly increasing smooth ``f`` with ``f(x+1) = f(x) + 1``.
The explicit 2-cocycle built from two circle 1-forms ``phi(theta) dtheta``
and ``psi(theta) dtheta`` is

    chi(g1, g2) = int_{S^1} (beta_{g1} - g2^* beta_{g1}) psi dtheta,

where ``beta_{g1}`` is the normalized primitive of ``phi - g1^* phi``; the
same cocycle also arises as the group coboundary of the lift-level 1-cochain
``F(f) = int_0^1 (Phi - Phi o f) psi`` with ``Phi`` a primitive of ``phi``.
Both routes are implemented and must agree pointwise to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import fieldexpr as fe
from .quadrature import CumulativePrimitive, QuadratureSpec, nodes_1d

__all__ = [
    "LiftError",
    "CircleLift",
    "CircleOneForm",
    "compose",
    "invert",
    "translation_number",
    "rotation_cocycle",
    "RotationCocycleValue",
    "euler_cocycle",
    "primitive_displacement",
    "coboundary_cocycle",
    "group_coboundary",
    "random_lift",
    "flow_lift",
    "DEFAULT_CIRCLE_SPEC",
]

DEFAULT_CIRCLE_SPEC = QuadratureSpec(order=8, panels_x=64, periodic=True)


class LiftError(ValueError):
    pass


class CircleLift:
    """Lift of an orientation-preserving circle diffeomorphism to the line."""

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        dfn: Callable[[np.ndarray], np.ndarray],
        label: str = "",
        scalar_fn: Optional[Callable[[float], float]] = None,
    ):
        self._fn = fn
        self._dfn = dfn
        self.label = label
        self._scalar_fn = scalar_fn

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._fn(x), dtype=float)
        return float(out) if out.ndim == 0 else out

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._dfn(x), dtype=float)
        return float(out) if out.ndim == 0 else out

    def __repr__(self) -> str:
        return f"CircleLift({self.label or 'callable'})"

    @classmethod
    def identity(cls) -> "CircleLift":
        return cls(lambda x: x, lambda x: np.ones(np.shape(x)), "id",
                   scalar_fn=lambda s: s)

    @classmethod
    def rotation(cls, a: float) -> "CircleLift":
        a = float(a)
        return cls(lambda x: x + a, lambda x: np.ones(np.shape(x)), f"R[{a}]",
                   scalar_fn=lambda s: s + a)

    @classmethod
    def from_expr(cls, src) -> "CircleLift":
        """Lift from an expression in ``theta`` (must itself be a valid lift)."""
        e = fe.parse(src)
        de = fe.differentiate(e, "theta")
        f = fe.compiled(e)
        df = fe.compiled(de)
        sf = fe.compiled_scalar(e)
        lift = cls(
            lambda x: np.broadcast_to(np.asarray(f(theta=x), float), np.shape(x)).copy()
            if np.shape(x) else f(theta=x),
            lambda x: np.broadcast_to(np.asarray(df(theta=x), float), np.shape(x)).copy()
            if np.shape(x) else df(theta=x),
            fe.to_str(e),
            scalar_fn=lambda s: sf(theta=s),
        )
        lift.check()
        return lift

    def shifted(self, n: int) -> "CircleLift":
        """The lift composed with the n-th integer translation."""
        n = int(n)
        sf = self._scalar_fn
        return CircleLift(
            lambda x: self._fn(x) + n,
            self._dfn,
            f"{self.label}+{n}",
            scalar_fn=(lambda s: sf(s) + n) if sf else None,
        )

    def normalized(self) -> "CircleLift":
        """Shift by an integer so that f(0) lands in [0, 1)."""
        return self.shifted(-math.floor(float(self(0.0))))

    def check(self, n: int = 256, tol: float = 1e-9) -> None:
        """Validate equivariance and monotonicity on a sample grid."""
        x = np.linspace(0.0, 1.0, n, endpoint=False)
        equi = np.abs(self(x + 1.0) - self(x) - 1.0).max()
        if equi > tol:
            raise LiftError(f"lift is not equivariant: |f(x+1)-f(x)-1| up to {equi:.3e}")
        d = self.deriv(x)
        if np.min(d) <= 0.0:
            raise LiftError(f"lift is not increasing: min f' = {np.min(d):.3e}")


def compose(f: CircleLift, g: CircleLift) -> CircleLift:
    """The lift of the composition, f after g, with chain-rule derivative."""
    sf, sg = f._scalar_fn, g._scalar_fn
    return CircleLift(
        lambda x: f(g(x)),
        lambda x: f.deriv(g(x)) * g.deriv(x),
        f"({f.label})o({g.label})",
        scalar_fn=(lambda s: sf(sg(s))) if (sf and sg) else None,
    )


def invert(f: CircleLift, tol: float = 1e-12, max_iter: int = 100) -> CircleLift:
    """Inverse lift, solved pointwise by bisection plus Newton polish."""
    grid = np.linspace(0.0, 1.0, 257)
    disp = f(grid) - grid
    lo_off = float(disp.max()) + 1e-9
    hi_off = float(disp.min()) - 1e-9

    def solve(x):
        x = np.asarray(x, dtype=float)
        lo = x - lo_off
        hi = x - hi_off
        y = 0.5 * (lo + hi)
        for _ in range(60):  # bisection: bracket to ~1e-18 relative
            mask = f(y) < x
            lo = np.where(mask, y, lo)
            hi = np.where(mask, hi, y)
            y = 0.5 * (lo + hi)
        it = 0
        while True:
            r = f(y) - x
            if np.abs(r).max() <= tol:
                return y
            it += 1
            if it > max_iter:
                raise LiftError(
                    f"inverse lift did not converge below {tol} in {max_iter} "
                    f"Newton iterations (residual {np.abs(r).max():.3e})"
                )
            y = np.clip(y - r / f.deriv(y), lo, hi)

    return CircleLift(
        solve,
        lambda x: 1.0 / f.deriv(solve(x)),
        f"({f.label})^-1",
    )


def translation_number(f: CircleLift, n_iter: int) -> float:
    """Poincare translation number by orbit averaging, error O(1/n_iter)."""
    if n_iter < 1:
        raise LiftError("n_iter must be >= 1")
    if f._scalar_fn is not None:
        x = 0.0
        step = f._scalar_fn
        for _ in range(n_iter):
            x = step(x)
        return x / n_iter
    x = 0.0
    for _ in range(n_iter):
        x = float(f(x))
    return x / n_iter


@dataclass(frozen=True)
class RotationCocycleValue:
    value: int
    residual: float
    raw: float


def rotation_cocycle(g1: CircleLift, g2: CircleLift, n_iter: int = 10 ** 6) -> RotationCocycleValue:
    """rot(f1) + rot(f2) - rot(f1 o f2) on lifts normalized to f(0) in [0, 1).

    The composition of the normalized factors is *not* renormalized, so the
    value is an integer (0 or 1 for these normalizations) up to the O(1/n)
    truncation of the translation numbers.
    """
    f1 = g1.normalized()
    f2 = g2.normalized()
    raw = (
        translation_number(f1, n_iter)
        + translation_number(f2, n_iter)
        - translation_number(compose(f1, f2), n_iter)
    )
    nearest = round(raw)
    residual = abs(raw - nearest)
    if residual > 0.1:
        raise LiftError(
            f"rotation cocycle value {raw} is too far from an integer "
            f"(residual {residual:.3e}); increase n_iter"
        )
    return RotationCocycleValue(int(nearest), residual, raw)


class CircleOneForm:
    """1-form ``psi(theta) dtheta`` on the circle, given by its coefficient."""

    def __init__(self, coeff: Callable[[np.ndarray], np.ndarray], label: str = ""):
        self._coeff = coeff
        self.label = label

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._coeff(x), dtype=float)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return float(out) if out.ndim == 0 else out

    @classmethod
    def from_expr(cls, src) -> "CircleOneForm":
        e = fe.parse(src)
        f = fe.compiled(e)
        return cls(lambda x: f(theta=x), fe.to_str(e))

    @classmethod
    def constant(cls, c: float) -> "CircleOneForm":
        c = float(c)
        return cls(lambda x: np.full(np.shape(x), c), repr(c))

    def periodicity_error(self, n: int = 256) -> float:
        x = np.linspace(0.0, 1.0, n, endpoint=False)
        return float(np.abs(self(x + 1.0) - self(x)).max())


class CirclePrimitive:
    """``Phi(t) = int_0^t phi`` extended to the line by Phi(t+n) = Phi(t) + n*A."""

    def __init__(self, phi: CircleOneForm, spec: QuadratureSpec | None = None):
        spec = spec or DEFAULT_CIRCLE_SPEC
        inner = QuadratureSpec(order=spec.order, panels_x=spec.panels_x)
        self._cum = CumulativePrimitive(phi, 0.0, 1.0, inner)
        self.total = self._cum.total  # A = int_{S^1} phi

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = np.floor(x)
        out = self._cum(x - n) + n * self.total
        return float(out) if out.ndim == 0 else out


def _circle_nodes(spec: QuadratureSpec | None):
    spec = spec or DEFAULT_CIRCLE_SPEC
    if not spec.periodic:
        spec = QuadratureSpec(spec.order, spec.panels_x, spec.panels_y, periodic=True)
    return nodes_1d(spec, 0.0, 1.0)


def euler_cocycle(
    phi: CircleOneForm,
    psi: CircleOneForm,
    g1: CircleLift,
    g2: CircleLift,
    spec: QuadratureSpec | None = None,
) -> float:
    """The explicit Euler 2-cocycle chi(g1, g2) built from phi and psi.

    Uses the normalized primitive ``beta(t) = Phi(t) - Phi(g1(t)) + Phi(g1(0))``,
    which is 1-periodic and independent of the choice of lift for g1.
    """
    theta, w = _circle_nodes(spec)
    Phi = CirclePrimitive(phi, spec)
    c0 = Phi(float(g1(0.0)))

    def beta(t):
        return Phi(t) - Phi(g1(t)) + c0

    integrand = (beta(theta) - beta(g2(theta))) * psi(theta)
    return float(w @ integrand)


def primitive_displacement(
    phi: CircleOneForm,
    psi: CircleOneForm,
    lift: CircleLift,
    spec: QuadratureSpec | None = None,
) -> float:
    """The lift-level 1-cochain ``F(f) = int_0^1 (Phi - Phi o f) psi``."""
    theta, w = _circle_nodes(spec)
    Phi = CirclePrimitive(phi, spec)
    return float(w @ ((Phi(theta) - Phi(lift(theta))) * psi(theta)))


def coboundary_cocycle(
    phi: CircleOneForm,
    psi: CircleOneForm,
    g1: CircleLift,
    g2: CircleLift,
    spec: QuadratureSpec | None = None,
) -> float:
    """The same Euler cocycle computed as a group coboundary of the cochain.

    Independent of the lift choices; must match :func:`euler_cocycle` to
    round-off since the integrands agree pointwise.
    """
    F = lambda f: primitive_displacement(phi, psi, f, spec)
    return group_coboundary(F, g1, g2)


def group_coboundary(c, g1: CircleLift, g2: CircleLift, compose_fn=compose) -> float:
    """delta c (g1, g2) = c(g2) - c(g1 g2) + c(g1) for a 1-cochain c."""
    return c(g2) - c(compose_fn(g1, g2)) + c(g1)


def random_lift(rng: np.random.Generator, n_modes: int = 3, rotation: float | None = None,
                strength: float = 0.6) -> CircleLift:
    """Random smooth lift ``x + a0 + sum_k (a_k sin + b_k cos)(2 pi k x)``.

    Fourier coefficients are rescaled so the derivative stays above
    ``1 - strength``; suitable for cocycle and rotation-number suites.
    """
    a0 = float(rng.uniform(0.0, 1.0)) if rotation is None else float(rotation)
    a = rng.uniform(-1.0, 1.0, n_modes)
    b = rng.uniform(-1.0, 1.0, n_modes)
    k = np.arange(1, n_modes + 1)
    norm = float((2.0 * np.pi * k * (np.abs(a) + np.abs(b))).sum())
    if norm > strength:
        a *= strength / norm
        b *= strength / norm
    terms = [f"theta + {a0!r}"]
    for i, kk in enumerate(k):
        terms.append(f"{float(a[i])!r}*sin(2*pi*{int(kk)}*theta)")
        terms.append(f"{float(b[i])!r}*cos(2*pi*{int(kk)}*theta)")
    return CircleLift.from_expr(" + ".join(terms))


def flow_lift(
    velocity: Callable[[np.ndarray, float], np.ndarray],
    velocity_dtheta: Callable[[np.ndarray, float], np.ndarray],
    t_end: float = 1.0,
    steps: int = 256,
    label: str = "flow",
) -> CircleLift:
    """Time-``t_end`` lift of the circle ODE  dtheta/dt = velocity(theta, t).

    Integrated by RK4 jointly with the variational equation, so the lift and
    its derivative are consistent.
    """
    h = t_end / steps

    def advance(x0):
        x = np.array(x0, dtype=float, copy=True)
        d = np.ones_like(x)
        t = 0.0
        for _ in range(steps):
            k1 = velocity(x, t)
            l1 = velocity_dtheta(x, t) * d
            k2 = velocity(x + 0.5 * h * k1, t + 0.5 * h)
            l2 = velocity_dtheta(x + 0.5 * h * k1, t + 0.5 * h) * (d + 0.5 * h * l1)
            k3 = velocity(x + 0.5 * h * k2, t + 0.5 * h)
            l3 = velocity_dtheta(x + 0.5 * h * k2, t + 0.5 * h) * (d + 0.5 * h * l2)
            k4 = velocity(x + h * k3, t + h)
            l4 = velocity_dtheta(x + h * k3, t + h) * (d + h * l3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            d = d + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
            t += h
        return x, d

    lift = CircleLift(
        lambda x: advance(np.asarray(x, dtype=float))[0],
        lambda x: advance(np.asarray(x, dtype=float))[1],
        label,
    )
    lift.check()
    return lift
