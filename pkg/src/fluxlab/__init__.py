"""fluxlab: invariants of area-preserving dynamics on surfaces with boundary.

A numerical laboratory for flux pairings, Calabi invariants, swept areas,
rotation numbers, and the explicit Euler cocycle of circle diffeomorphisms,
on the disk, the annulus, and the Mobius band.
"""

from .quadrature import QuadratureSpec, integrate_1d, integrate_2d
from .fieldexpr import parse, differentiate, evaluate
from .circle import (
    CircleLift,
    CircleOneForm,
    compose,
    invert,
    translation_number,
    rotation_cocycle,
    euler_cocycle,
    coboundary_cocycle,
    group_coboundary,
)
from .surface import (
    QuotientSurface,
    FormField,
    ArcData,
    standard_area_form,
    standard_primitive,
    wedge,
    integrate,
    exterior_derivative,
    pullback,
    poincare_dual,
    cut_system,
)
from .flow import (
    TimeDepVectorField,
    FlowDiffeo,
    hamiltonian_field,
    localized_hamiltonian,
    mobius_shear,
    shear_field,
    boundary_extension,
    flow_map,
    boundary_trace,
    compose_diffeos,
    invert_diffeo,
)
from .invariants import (
    Patch,
    IsotopyPath,
    flux_lambda,
    calabi_disk,
    local_calabi,
    swept_area,
    flux_kernel_test,
)
from .transgression import (
    boundary_restriction,
    flux_cochain,
    coboundary_flux_cochain,
    verify_transgression,
)
from .celldivision import (
    CellDivisionGeometry,
    calabi_generator,
    cell_division_split,
)

__version__ = "0.1.0"
