"""Exact-arithmetic simulation of the integer rotation map near its
integrable limit: lattice dynamics, the piecewise-affine flow it shadows,
first-return maps on invariant annuli, and period statistics.

All user-facing quantities are exact rationals unless a function says
otherwise; floats appear only in reports and plots.
"""

from .lattice import (
    DEFAULT_CAP,
    LatticePoint,
    Unresolved,
    discrete_field_v,
    floor_div,
    iterate_F,
    map_F,
    map_F_inv,
    orbit_period,
    orbit_points,
    symmetry_G,
)
from .integrable import (
    CriticalNumber,
    DegenerateTwist,
    NoSolution,
    OnCriticalBoundary,
    PolygonClass,
    approx_rho_star,
    asymptotic_profile,
    class_at,
    class_of,
    critical_floor,
    critical_number,
    field_w,
    floor_sqrt,
    flow_advance,
    hamiltonian,
    is_critical_number,
    next_critical,
    period_T,
    period_T_prime,
    piecewise_P,
    piecewise_P_inv,
    polygon_class,
    polygon_vertices,
    rho_star,
    traverse_time,
    twist_kappa,
)
from .returnmap import (
    CapExceeded,
    CylinderCoord,
    Escaped,
    LambdaTooLarge,
    OrbitSummary,
    ReturnDomain,
    StripHit,
    box_of,
    build_A,
    choose_base_point,
    closure_A_bar,
    continuum_base,
    cylinder_reflect,
    eta,
    eta_plane,
    flow_first_return,
    flow_return_time,
    fundamental_index,
    in_domain_Xe,
    is_transition,
    make_return_domain,
    phi_with_steps,
    return_map_Phi,
    rotation_number,
    section_point,
    strip_map,
    symmetry_Ge,
    trace_orbits,
    twist_T,
    twist_reversor,
    unperturbed_return,
)
from .stats import (
    DistributionReport,
    EmptyInput,
    ExcursionStats,
    OrbitRecord,
    RegionTooLarge,
    agreement_density,
    excursion_stats,
    gamma_law,
    period_distribution,
    records_from_orbits,
    symmetric_fraction,
)

__version__ = "0.1.0"
