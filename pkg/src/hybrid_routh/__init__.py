"""Hybrid forced Lagrangian systems with Routh reduction by a cyclic coordinate."""

from .errors import (
    ChartError,
    DimensionError,
    EventLocalizationError,
    GRegularityError,
    HyperregularityError,
    ImpactError,
    IntegrationError,
    RegularityError,
    ScenarioError,
    SymmetryError,
)
from .mechanics import (
    DerivativeBundle,
    ForcedLagrangianSystem,
    StateTQ,
    energy,
    force_eval,
    forced_acceleration,
    lagrangian_acceleration,
    lagrangian_eval,
    mass_matrix,
    numeric_derivatives,
)
from .hybrid import (
    ComparisonReport,
    GuardSpec,
    HybridSystemDef,
    HybridTrajectory,
    ImpactRecord,
    IntegratorConfig,
    Termination,
    compare_trajectories,
    execute,
    guard_value,
    locate_event,
    newtonian_impact,
    rk4_step,
)
from .hamiltonian import (
    StateTstarQ,
    execute_hamiltonian,
    forced_hamiltonian_field,
    hamiltonian_eval,
    inverse_legendre,
    legendre,
    map_hybrid_flow,
)
from .routh import (
    CyclicSpec,
    ReducedHybridTrajectory,
    ReducedSystem,
    compare_full_reduced,
    execute_reduced,
    force_symmetry_check,
    hybrid_momentum_check,
    make_reduced_system,
    momentum,
    reconstruct,
    reduce_guard,
    reduced_acceleration,
    solve_cyclic_velocity,
)
from .scenarios import (
    ScenarioConfig,
    billiard_cartesian,
    billiard_polar,
    bouncer_1d,
    load_scenario,
)

__version__ = "0.1.0"
