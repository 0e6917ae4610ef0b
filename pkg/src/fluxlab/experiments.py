"""Experiment runners behind the command-line front end.

Each runner assembles surfaces, forms, and flows, executes one verification
suite, and returns report rows.  Runners are deterministic given the seed
carried by the settings.
"""

from __future__ import annotations

import time
from typing import Callable, Optional

import numpy as np

from . import circle as ci
from . import fieldexpr as fe
from .celldivision import CellDivisionGeometry, cell_division_split
from .config import RunSettings
from .flow import (
    boundary_extension,
    boundary_trace,
    compose_diffeos,
    disk_support_mask,
    flow_map,
    identity_diffeo,
    invert_diffeo,
    localized_hamiltonian,
    mobius_shear,
    shear_field,
    smooth_twist_hamiltonian,
)
from .invariants import IsotopyPath, Patch, calabi_disk, flux_kernel_test, flux_lambda, local_calabi, swept_area
from .quadrature import QuadratureSpec, integrate_1d
from .report import Row
from .surface import (
    FormField,
    QuotientSurface,
    cut_system,
    poincare_dual,
    standard_area_form,
    standard_primitive,
)
from .transgression import (
    boundary_restriction,
    coboundary_flux_cochain,
    standard_pairing_form,
    verify_transgression,
)

__all__ = ["RUNNERS", "run_experiment"]


def _surface_spec(settings: RunSettings) -> QuadratureSpec:
    return QuadratureSpec(order=settings.quad_order,
                          panels_x=settings.quad_panels_x,
                          panels_y=settings.quad_panels_y)


def _circle_spec(settings: RunSettings) -> QuadratureSpec:
    return QuadratureSpec(order=settings.quad_order,
                          panels_x=settings.quad_panels,
                          periodic=True)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# flux
# ---------------------------------------------------------------------------

def run_flux(settings: RunSettings, params: dict) -> list[Row]:
    """Shear-family flux against dx versus the 1-D profile-moment oracle."""
    name = params.get("_name", "flux")
    surface = QuotientSurface("mobius", half_width=max(settings.half_width, 0.5))
    eta = standard_primitive(surface)
    lam = standard_pairing_form(surface)
    spec = _surface_spec(settings)
    ts = [float(s) for s in str(params.get("t", "0.25, 1, 2")).split(",")]
    # 1-D oracle: -t * int y b'(y) dy  (independent quadrature)
    moment = integrate_1d(lambda y: y * fe.bump_value(y, 1),
                          -surface.half_width, surface.half_width,
                          QuadratureSpec(order=8, panels_x=64))
    rows = []
    values = []
    for t in ts:
        (value, sec) = _timed(lambda: flux_lambda(surface, mobius_shear(surface, t), lam, eta, spec))
        values.append(value)
        rows.append(Row.compare(
            f"shear flux t={t:g}", value, -t * moment, settings.tol,
            "flux of the shear family equals -t * int y b'(y) dy",
            name, sec))
    if len(ts) >= 2 and ts[0] != 0:
        scale = ts[1] / ts[0]
        rows.append(Row.compare(
            "flux linearity in t", values[1], scale * values[0], settings.tol,
            "the shear family is a one-parameter flux line", name))
    return rows


# ---------------------------------------------------------------------------
# calabi
# ---------------------------------------------------------------------------

def run_calabi(settings: RunSettings, params: dict) -> list[Row]:
    """Disk Calabi invariant: linearity, primitive independence, additivity."""
    name = params.get("_name", "calabi")
    disk = QuotientSurface("disk")
    amp = float(params.get("amplitude", 0.4))
    radius = float(params.get("radius", 0.3))
    cx, cy = 0.15, -0.1
    field = localized_hamiltonian(
        disk, smooth_twist_hamiltonian(cx, cy, radius, amp),
        support_mask=disk_support_mask(disk, cx, cy, radius + 1e-9))
    steps = settings.steps_per_unit
    g1 = flow_map(field, 1.0, steps)
    (cal1, sec) = _timed(lambda: calabi_disk(g1))
    rows = [Row(f"calabi twist", cal1, settings.tol,
                "defining integral int eta ^ g* eta", None, None, True, name, sec)]
    for t in (0.5, 2.0):
        calt = calabi_disk(flow_map(field, t, max(1, round(steps * t))))
        rows.append(Row.compare(
            f"time linearity t={t:g}", calt, t * cal1, settings.tol,
            "the invariant is linear along a one-parameter flow", name))
    eta1 = FormField.from_exprs(disk, 1, "odd", "0", "x")
    cal_alt = calabi_disk(g1, eta=eta1)
    rows.append(Row.compare(
        "primitive independence", cal_alt, cal1, settings.tol,
        "changing the primitive changes the integrand by a boundary term", name))
    field2 = localized_hamiltonian(
        disk, smooth_twist_hamiltonian(-0.2, 0.25, 0.28, -amp),
        support_mask=disk_support_mask(disk, -0.2, 0.25, 0.28 + 1e-9))
    g2 = flow_map(field2, 1.0, steps)
    spec = QuadratureSpec(settings.quad_order, 24, 64)
    c1 = calabi_disk(g1, spec=spec)
    cal2 = calabi_disk(g2, spec=spec)
    cal12 = calabi_disk(compose_diffeos(g1, g2), spec=spec)
    rows.append(Row.compare(
        "additivity", cal12, c1 + cal2, settings.tol,
        "the invariant is a homomorphism under composition", name))
    return rows


# ---------------------------------------------------------------------------
# swept area
# ---------------------------------------------------------------------------

def run_swept_area(settings: RunSettings, params: dict) -> list[Row]:
    """Swept area of cut-system arcs equals the flux against their duals."""
    name = params.get("_name", "swept-area")
    rows = []
    spec = _surface_spec(settings)

    mob = QuotientSurface("mobius", half_width=max(settings.half_width, 0.5))
    eta_m = standard_primitive(mob)
    arc_m = cut_system(mob)[0]
    dual_m = poincare_dual(mob, arc_m)
    for t in (0.25, 1.0):
        iso = IsotopyPath(shear_field(mob), t, settings.steps_per_unit)
        (area, sec) = _timed(lambda: swept_area(mob, arc_m, iso))
        flux = flux_lambda(mob, mobius_shear(mob, t), dual_m, eta_m, spec, check=False)
        rows.append(Row.compare(
            f"mobius shear t={t:g}", area, flux, settings.tol,
            "area swept across a cut arc equals the flux against its dual",
            name, sec))

    ann = QuotientSurface("annulus", half_width=0.5)
    eta_a = standard_primitive(ann)
    arc_a = cut_system(ann)[0]
    dual_a = poincare_dual(ann, arc_a)
    plateau = "bump(y/1.6)"
    for c in (0.3, 1.0):
        fld = shear_field(ann, f"{c}*{plateau}")
        iso = IsotopyPath(fld, 1.0, settings.steps_per_unit)
        area = swept_area(ann, arc_a, iso)
        g = flow_map(fld, 1.0, settings.steps_per_unit)
        flux = flux_lambda(ann, g, dual_a, eta_a, spec, check=False)
        rows.append(Row.compare(
            f"annulus plateau shear c={c:g}", area, flux, settings.tol,
            "area swept across a cut arc equals the flux against its dual", name))

    twist = localized_hamiltonian(
        mob, smooth_twist_hamiltonian(0.42, 0.0, 0.3, 0.25),
        support_mask=disk_support_mask(mob, 0.42, 0.0, 0.3001))
    iso_t = IsotopyPath(twist, 1.0, settings.steps_per_unit)
    area_t = swept_area(mob, arc_m, iso_t)
    flux_t = flux_lambda(mob, flow_map(twist, 1.0, settings.steps_per_unit),
                         dual_m, eta_m, spec, check=False)
    rows.append(Row.compare(
        "mobius interior twist", area_t, flux_t, settings.tol,
        "a disk-supported flow sweeps zero net area across the cut", name))

    # isotopy invariance: a reparameterized shear reaches the same map
    repar = shear_field(mob, "(2 - 2*t)*bump(y)")  # speed 2(1-t), endpoint t=1
    area_r = swept_area(mob, arc_m, IsotopyPath(repar, 1.0, settings.steps_per_unit))
    area_u = swept_area(mob, arc_m, IsotopyPath(shear_field(mob), 1.0, settings.steps_per_unit))
    rows.append(Row.compare(
        "isotopy invariance", area_r, area_u, settings.tol,
        "time-reparameterized isotopies with equal endpoints sweep equal area", name))
    return rows


# ---------------------------------------------------------------------------
# cocycles on the circle
# ---------------------------------------------------------------------------

def run_cocycle(settings: RunSettings, params: dict) -> list[Row]:
    """Euler-cocycle identities and rotation-number checks on the circle."""
    name = params.get("_name", "cocycle")
    rng = np.random.default_rng(int(params.get("seed", settings.seed)))
    spec = _circle_spec(settings)
    n_triples = int(params.get("triples", 50))
    n_pairs = int(params.get("pairs", 20))
    n_rot = int(params.get("rot_pairs", 20))
    n_iter = int(params.get("n_iter", 10 ** 6))
    phi = ci.CircleOneForm.from_expr("1 + 0.5*cos(2*pi*theta)")
    psi = ci.CircleOneForm.from_expr("2 - sin(2*pi*theta)")
    rows = []

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_triples):
        a, b, c = (ci.random_lift(rng) for _ in range(3))
        chi = lambda u, v: ci.euler_cocycle(phi, psi, u, v, spec)
        res = chi(b, c) - chi(ci.compose(a, b), c) + chi(a, ci.compose(b, c)) - chi(a, b)
        worst = max(worst, abs(res))
    rows.append(Row.bound(
        f"cocycle identity ({n_triples} triples)", worst, 1e-7,
        "the boundary of the euler cocycle vanishes on all triples",
        name, time.perf_counter() - t0))

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_pairs):
        g1, g2 = ci.random_lift(rng), ci.random_lift(rng)
        d = abs(ci.euler_cocycle(phi, psi, g1, g2, spec)
                - ci.coboundary_cocycle(phi, psi, g1, g2, spec))
        worst = max(worst, d)
    rows.append(Row.bound(
        f"cocycle = coboundary route ({n_pairs} pairs)", worst, 1e-8,
        "the euler cocycle equals the coboundary of the primitive cochain",
        name, time.perf_counter() - t0))

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_rot):
        base = ci.random_lift(rng, strength=0.5)
        p, q = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        f1 = base
        for _ in range(p - 1):
            f1 = ci.compose(f1, base)
        f2 = base
        for _ in range(q - 1):
            f2 = ci.compose(f2, base)
        val = ci.rotation_cocycle(f1, f2, n_iter)
        worst = max(worst, val.residual)
    rows.append(Row.bound(
        f"rotation cocycle integrality ({n_rot} pairs)", worst, 1e-3,
        "the translation-number coboundary is integral on commuting pairs",
        name, time.perf_counter() - t0))
    return rows


# ---------------------------------------------------------------------------
# transgression
# ---------------------------------------------------------------------------

def _transgression_pairs(surface, settings: RunSettings, rng, n_pairs: int):
    """Mix of boundary extensions and boundary-fixing perturbations.

    Each map comes with the rectangles carrying its support, so the surface
    quadrature can spend its panels where the coboundary integrand lives.
    """
    w = surface.half_width
    depth = settings.collar_depth if settings.collar_depth else w / 2.0
    steps = settings.steps_per_unit
    collar = [(0.0, 1.0, -w, -w + depth), (0.0, 1.0, w - depth, w)]

    def extension(k):
        a0 = float(rng.uniform(0.05, 0.3)) * (1 if k % 2 else -1)
        a1 = float(rng.uniform(0.03, 0.12))
        b1 = float(rng.uniform(0.03, 0.12))
        src = f"{a0!r} + {a1!r}*sin(2*pi*theta) + {b1!r}*cos(2*pi*theta)"
        return flow_map(boundary_extension(surface, src, collar_depth=depth), 1.0, steps), collar

    def rel_twist():
        cx = float(rng.uniform(0.32, 0.68))
        cy = float(rng.uniform(-0.05, 0.05))
        r = float(rng.uniform(0.22, 0.3))
        amp = float(rng.uniform(0.08, 0.18)) * (1 if rng.uniform() < 0.5 else -1)
        fld = localized_hamiltonian(
            surface, smooth_twist_hamiltonian(cx, cy, r, amp),
            support_mask=disk_support_mask(surface, cx, cy, r + 1e-9))
        box = [(cx - r, cx + r, cy - r, cy + r)]
        return flow_map(fld, 1.0, steps), box

    pairs = [(extension(0), extension(1)),
             (rel_twist(), rel_twist()),
             (extension(2), rel_twist()),
             (rel_twist(), extension(3))]
    while len(pairs) < n_pairs:
        k = len(pairs)
        if k % 3 == 2:
            pairs.append((rel_twist(), rel_twist()))
        else:
            pairs.append((extension(k), extension(k + 1)))
    return pairs[:n_pairs]


def run_transgression(settings: RunSettings, params: dict) -> list[Row]:
    """The coboundary of the flux cochain equals the boundary Euler cocycle."""
    name = params.get("_name", "transgression")
    rng = np.random.default_rng(int(params.get("seed", settings.seed)))
    surface = QuotientSurface("mobius", half_width=max(settings.half_width, 0.5))
    # panels apply per support rectangle (collar band or twist box)
    spec = QuadratureSpec(order=settings.quad_order,
                          panels_x=max(settings.quad_panels_x, 16), panels_y=24)
    cspec = _circle_spec(settings)
    n_pairs = int(params.get("pairs", 10))
    rows = []
    pairs = _transgression_pairs(surface, settings, rng, n_pairs)
    for i, ((h1, region), (h2, _)) in enumerate(pairs):
        (rep, sec) = _timed(lambda: verify_transgression(
            surface, h1, h2, spec=spec, circle_spec=cspec,
            tol=settings.tol_transgression, region=region))
        rows.append(Row.compare(
            f"pair {i}", rep.lhs, rep.rhs, settings.tol_transgression,
            "flux-cochain coboundary equals the euler cocycle of the traces",
            name, sec))
    (h1, region), (h2, _) = pairs[0]
    rep0 = verify_transgression(surface, h1, h2, spec=spec, circle_spec=cspec,
                                region=region)
    rows.append(Row.compare(
        "boundary area total", rep0.area_total, surface.area, settings.tol,
        "the boundary restriction of the primitive integrates to the area", name))
    return rows


# ---------------------------------------------------------------------------
# flows
# ---------------------------------------------------------------------------

def run_flows(settings: RunSettings, params: dict) -> list[Row]:
    """Integrator and boundary-extension checks."""
    name = params.get("_name", "flows")
    surface = QuotientSurface("mobius", half_width=max(settings.half_width, 0.5))
    w = surface.half_width
    steps = settings.steps_per_unit
    rows = []

    g = flow_map(shear_field(surface), 1.0, steps)
    p = mobius_shear(surface, 1.0)
    x, y = g.grid(24)
    gx, gy, _ = g.eval(x, y)
    px, py, _ = p.eval(x, y)
    rows.append(Row.bound(
        "integrated shear vs closed form",
        max(np.abs(gx - px).max(), np.abs(gy - py).max()), 1e-9,
        "the integrator reproduces the closed-form shear", name))

    depth = settings.collar_depth if settings.collar_depth else w / 2.0
    xi_src = "0.2 + 0.1*sin(2*pi*theta) + 0.05*cos(4*pi*theta)"
    ext = boundary_extension(surface, xi_src, collar_depth=depth)
    h = flow_map(ext, 1.0, steps)
    rows.append(Row.bound("extension det", h.area_preservation_error(32), settings.tol,
                          "extended flows preserve the area density", name))
    rows.append(Row.bound("extension divergence", ext.divergence_error(), 1e-8,
                          "the collar extension field is divergence-free", name))

    # independent 1-D oracle for the boundary trace
    tr = boundary_trace(h)
    vel = fe.compiled(fe.parse(xi_src))
    thetas = np.linspace(0.0, 1.0, 97)
    th = thetas.copy()
    n1d = 2 * steps + 37  # deliberately different step count
    hh = 1.0 / n1d
    for _ in range(n1d):
        k1 = vel(theta=th)
        k2 = vel(theta=th + 0.5 * hh * k1)
        k3 = vel(theta=th + 0.5 * hh * k2)
        k4 = vel(theta=th + hh * k3)
        th = th + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    rows.append(Row.bound(
        "trace vs circle flow", float(np.abs(tr(thetas) - th).max()), settings.tol,
        "the boundary trace equals the 1-D flow of the boundary field", name))

    hinv = invert_diffeo(h)
    hx, hy = h(x, y)
    ix, iy = hinv(hx, hy)
    rows.append(Row.bound(
        "composition with inverse",
        max(np.abs(ix - x).max(), np.abs(iy - y).max()), settings.tol,
        "reversed-field flows invert the forward flow", name))

    coarse = flow_map(ext, 1.0, 32)
    fine = flow_map(ext, 1.0, 64)
    finest = flow_map(ext, 1.0, 128)
    cx_, cy_, _ = coarse.eval(x, y)
    fx_, fy_, _ = fine.eval(x, y)
    ex_, ey_, _ = finest.eval(x, y)
    e1 = max(np.abs(cx_ - ex_).max(), np.abs(cy_ - ey_).max())
    e2 = max(np.abs(fx_ - ex_).max(), np.abs(fy_ - ey_).max())
    ratio = e1 / max(e2, 1e-300)
    rows.append(Row(
        "step-halving order", ratio, 64.0,
        "halving the step shrinks the error at fourth order",
        16.0, abs(ratio - 16.0), 8.0 <= ratio <= 64.0, name))
    return rows


# ---------------------------------------------------------------------------
# cell division
# ---------------------------------------------------------------------------

def run_cell_division(settings: RunSettings, params: dict) -> list[Row]:
    """Split a flux-kernel twist into two pieces of vanishing local Calabi."""
    name = params.get("_name", "cell-division")
    target = float(params.get("target", 0.2))
    geo = CellDivisionGeometry()
    surface, h = geo.standard_input(target)
    (res, sec) = _timed(lambda: cell_division_split(surface, h, geo))
    rows = [
        Row.compare("input invariant", res.cal_input, target, 5e-5,
                    "the prepared input carries the requested local invariant",
                    name, sec),
        Row.bound("kernel residual", max(map(abs, res.kernel_residuals)), 1e-6,
                  "a disk-supported map has vanishing flux vector", name),
        Row.bound("first factor invariant", res.cal_u, 1e-5,
                  "the splitting cancels the local invariant of the first factor", name),
        Row.bound("second factor invariant", res.cal_v, 1e-5,
                  "the splitting cancels the local invariant of the second factor", name),
        Row.compare("seam sign flip", res.sign_in_v, -res.sign_in_u, 1e-6,
                    "the B-overlap generator flips sign between the two patch sections",
                    name),
        Row.bound("composition residual", res.composition_residual, 1e-5,
                  "the two factors compose back to the input map", name),
    ]
    return rows


RUNNERS: dict[str, Callable[[RunSettings, dict], list[Row]]] = {
    "flux": run_flux,
    "calabi": run_calabi,
    "swept-area": run_swept_area,
    "cocycle": run_cocycle,
    "transgression": run_transgression,
    "flows": run_flows,
    "cell-division": run_cell_division,
}


def run_experiment(etype: str, settings: RunSettings, params: dict) -> list[Row]:
    if etype not in RUNNERS:
        raise KeyError(f"unknown experiment type {etype!r}")
    return RUNNERS[etype](settings, params)
