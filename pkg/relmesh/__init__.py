"""relmesh: special relativistic hydrodynamics on adaptive moving meshes.

relmesh solves the 2D/3D ideal-gas relativistic Euler equations with
entropy conservative and entropy stable finite volume fluxes on
structured meshes that follow the flow through a monitor-driven
redistribution step, with discrete geometric conservation laws that keep
uniform states exactly uniform.

Example:
    >>> from relmesh import RunConfig, Simulation
    >>>
    >>> config = RunConfig(case="vortex", cells=(40,), flux="es2")
    >>> result = Simulation(config).run(write_outputs=False)
    >>>
    >>> # Total entropy after every step
    >>> [row[1] for row in result.series]
    >>>
    >>> # Lower-level pieces
    >>> from relmesh import GasModel, PrimitiveState, prim_to_cons
    >>> prim_to_cons(PrimitiveState(1.0, [0.0, 0.0], 1.0), GasModel(5 / 3)).E
"""

__version__ = "0.3.0"

from .adaptation import (
    AdaptationConfig,
    MonitorField,
    compute_monitor,
    jacobi_redistribute,
    limit_displacement,
    smooth_monitor,
)
from .boundaries import BoundaryConditions, BoundaryKind
from .cases import CaseSpec, available_cases, get_case
from .exceptions import (
    CaseNotFoundError,
    ConfigError,
    CutlineError,
    DegeneracyError,
    DomainError,
    MeshError,
    NonConvergenceError,
    PhysicsError,
    RelmeshError,
    SnapshotError,
    SolverError,
    StorageError,
    TangledMeshError,
    TimeStepUnderflowError,
    UnphysicalStateError,
    ValidationError,
)
from .fluxes import (
    FluxContext,
    InterfaceMetrics,
    dissipation_matrix,
    dissipation_speed,
    ec_entropy_flux,
    ec_flux_cartesian,
    ec_flux_curvilinear,
    ec_state,
    es_flux_first_order,
    es_flux_second_order,
    linearization_holds,
    log_mean,
    minmod,
)
from .metrics import MetricSet, StructuredMesh, VclTrajectory
from .models import RunConfig, RunRecord
from .physics import (
    ConservedState,
    EntropyBundle,
    GasModel,
    PrimitiveState,
    cons_to_prim,
    entropy_bundle,
    prim_to_cons,
)
from .runner import Simulation, convergence_table, emit_vcl_comparison
from .snapshots import Snapshot, emit_cutline, read_snapshot, write_snapshot
from .solver import SolutionField, Solver, SolverSettings, StepReport
from .storage import Storage

__all__ = [
    "Simulation",
    "RunConfig",
    "RunRecord",
    "Storage",
    "convergence_table",
    "emit_vcl_comparison",
    # Physics
    "GasModel",
    "PrimitiveState",
    "ConservedState",
    "EntropyBundle",
    "prim_to_cons",
    "cons_to_prim",
    "entropy_bundle",
    # Fluxes
    "FluxContext",
    "InterfaceMetrics",
    "log_mean",
    "minmod",
    "ec_flux_cartesian",
    "ec_state",
    "ec_flux_curvilinear",
    "ec_entropy_flux",
    "dissipation_matrix",
    "dissipation_speed",
    "es_flux_first_order",
    "es_flux_second_order",
    "linearization_holds",
    # Mesh
    "StructuredMesh",
    "MetricSet",
    "VclTrajectory",
    "BoundaryConditions",
    "BoundaryKind",
    "AdaptationConfig",
    "MonitorField",
    "compute_monitor",
    "smooth_monitor",
    "jacobi_redistribute",
    "limit_displacement",
    # Solver
    "SolutionField",
    "Solver",
    "SolverSettings",
    "StepReport",
    # Cases and output
    "CaseSpec",
    "get_case",
    "available_cases",
    "Snapshot",
    "read_snapshot",
    "write_snapshot",
    "emit_cutline",
    # Exceptions
    "RelmeshError",
    "ValidationError",
    "ConfigError",
    "CaseNotFoundError",
    "PhysicsError",
    "DomainError",
    "UnphysicalStateError",
    "NonConvergenceError",
    "DegeneracyError",
    "MeshError",
    "TangledMeshError",
    "SolverError",
    "TimeStepUnderflowError",
    "StorageError",
    "SnapshotError",
    "CutlineError",
]
