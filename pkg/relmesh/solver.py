"""Semi-discrete residual, SSP Runge-Kutta stepping and entropy diagnostics.

The unknowns are the Jacobian-weighted conserved variables (JU) and the
cell Jacobians J. Both are advanced with the same Runge-Kutta combination
using the same stage metrics, which keeps constant states exactly constant
on a moving mesh.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .adaptation import AdaptationConfig, propose_displacement
from .boundaries import GHOST, BoundaryConditions
from .exceptions import TimeStepUnderflowError, UnphysicalStateError, ValidationError
from .fluxes import (
    FluxContext,
    ec_entropy_flux,
    ec_flux_curvilinear,
    es_flux_first_order,
    es_flux_second_order,
)
from .metrics import (
    MetricSet,
    StructuredMesh,
    VclTrajectory,
    compute_scl_metrics,
    jacobian_direct,
    jacobian_rhs_vcl1,
    temporal_metrics_vcl1,
    vcl2_face_terms,
    vcl2_temporal_metrics,
)
from .physics import (
    ConservedState,
    GasModel,
    PrimitiveState,
    cons_to_prim,
    eigenvalues,
    entropy_bundle,
    entropy_variables,
    prim_to_cons,
    rotate_velocity,
    velocity_rotation,
)

logger = logging.getLogger(__name__)

FLUX_KINDS = ("ec", "es1", "es2")
VCL_KINDS = ("vcl1", "vcl2")

# Shu-Osher coefficients (a, b, c): U_i = a U^n + b (U_{i-1} + dt L(U_{i-1}, t_n + c dt))
RK_TABLEAUS = {
    "rk2": ((0.0, 1.0, 0.0), (0.5, 0.5, 1.0)),
    "rk3": ((0.0, 1.0, 0.0), (0.75, 0.25, 1.0), (1.0 / 3.0, 2.0 / 3.0, 0.5)),
}

DT_FLOOR = 1e-14


@dataclass
class SolutionField:
    """Cell unknowns (JU) and J on a mesh with computational steps dxi.

    Attributes:
        ju: Jacobian-weighted conserved variables, shape (d+2, *dims)
        jac: Cell Jacobians, shape dims
        dxi: Computational step per direction
    """

    ju: np.ndarray
    jac: np.ndarray
    dxi: Tuple[float, ...]

    @classmethod
    def from_primitive(
        cls, prim: PrimitiveState, jac: np.ndarray, gas: GasModel, dxi: Sequence[float]
    ) -> "SolutionField":
        cons = prim_to_cons(prim, gas).stack()
        return cls(ju=cons * jac, jac=np.array(jac, dtype=float), dxi=tuple(dxi))

    @property
    def cell_measure(self) -> float:
        """Product of the computational steps."""
        return float(np.prod(self.dxi))

    def conserved(self) -> ConservedState:
        return ConservedState.from_stack(self.ju / self.jac)

    def primitive(self, gas: GasModel) -> PrimitiveState:
        """Recover primitives of U = (JU)/J.

        Raises:
            UnphysicalStateError: With the offending cell index
        """
        return cons_to_prim(self.conserved(), gas)


@dataclass(frozen=True)
class StepReport:
    """Diagnostics of one completed time step.

    Attributes:
        time: Time at the end of the step
        dt: Step length
        total_entropy: Sum of J eta over cells times the cell measure
        entropy_flux_boundary: Net numerical entropy flux through the box at t_n
        max_wavespeed: Largest |nt + L lambda| per direction
        jacobian_drift: l1 distance between the evolved and direct Jacobians
        delta_tau: Mesh displacement fraction applied
    """

    time: float
    dt: float
    total_entropy: float
    entropy_flux_boundary: float
    max_wavespeed: Tuple[float, ...]
    jacobian_drift: float
    delta_tau: float

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValidationError(f"Step length must be positive, got {self.dt}")


def _stencil(q: np.ndarray, k: int, dim: int) -> List[np.ndarray]:
    """Slices of a ghost-padded field at cells i-1, i, i+1, i+2 for every face i+1/2."""
    cells = q.shape[1 + k] - 2 * GHOST
    base = [slice(None)] + [slice(GHOST, -GHOST)] * dim
    out = []
    for shift in range(4):
        idx = list(base)
        idx[1 + k] = slice(shift, shift + cells + 1)
        out.append(q[tuple(idx)])
    return out


def interface_fluxes(
    q: np.ndarray,
    ms: MetricSet,
    gas: GasModel,
    flux_kind: str,
    k: int,
    variables: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, FluxContext]:
    """Numerical fluxes at all faces of direction k.

    Args:
        q: Ghost-padded stacked primitives
        ms: Stage metrics
        gas: Equation of state
        flux_kind: One of ``ec``, ``es1``, ``es2``
        k: Direction
        variables: Ghost-padded entropy variables (used by ``es2``)

    Returns:
        Tuple (fluxes shaped (d+2, *face_shape_k), interface context)
    """
    dim = ms.jac.ndim
    prims = [PrimitiveState.from_stack(s) for s in _stencil(q, k, dim)]
    ctx = FluxContext(prims[1], prims[2], ms.interface(k), gas)
    if flux_kind == "ec":
        return ec_flux_curvilinear(ctx), ctx
    if flux_kind == "es1":
        return es_flux_first_order(ctx), ctx
    if flux_kind == "es2":
        stencil_v = None if variables is None else _stencil(variables, k, dim)
        return es_flux_second_order(prims, ctx, stencil_v), ctx
    raise ValidationError(f"Unknown flux kind '{flux_kind}' (expected one of {FLUX_KINDS})")


def rhs(
    sol: SolutionField,
    ms: MetricSet,
    gas: GasModel,
    boundaries: BoundaryConditions,
    flux_kind: str = "es2",
    *,
    with_entropy_flux: bool = False,
) -> Union[np.ndarray, Tuple[np.ndarray, Tuple[np.ndarray, ...]]]:
    """Flux-difference residual d(JU)/dt = -sum_k delta_k[F_k] / dxi_k.

    Args:
        sol: Current unknowns
        ms: Metrics of the stage mesh
        gas: Equation of state
        boundaries: Ghost-layer treatment
        flux_kind: Interface flux
        with_entropy_flux: Also return the face entropy fluxes per direction

    Returns:
        Residual shaped like ``sol.ju``, optionally with the entropy fluxes

    Raises:
        UnphysicalStateError: If a cell state cannot be recovered
    """
    dim = sol.jac.ndim
    if boundaries.dim != dim:
        raise ValidationError(f"Boundary conditions for {boundaries.dim}D used on a {dim}D field")
    prim = sol.primitive(gas)
    q = boundaries.pad_cells(prim.stack())
    variables = entropy_variables(PrimitiveState.from_stack(q), gas) if flux_kind == "es2" else None

    residual = np.zeros_like(sol.ju)
    entropy_fluxes = []
    for k in range(dim):
        fhat, ctx = interface_fluxes(q, ms, gas, flux_kind, k, variables)
        residual -= np.diff(fhat, axis=1 + k) / sol.dxi[k]
        if with_entropy_flux:
            entropy_fluxes.append(ec_entropy_flux(ctx, fhat))
    if with_entropy_flux:
        return residual, tuple(entropy_fluxes)
    return residual


def entropy_production(
    sol: SolutionField,
    ms: MetricSet,
    gas: GasModel,
    boundaries: BoundaryConditions,
    flux_kind: str = "es2",
) -> np.ndarray:
    """Cellwise V^T d(JU)/dt - phi dJ/dt + sum_k delta_k[q_k] / dxi_k.

    Zero up to roundoff for the EC flux and non-positive for ES fluxes.
    """
    residual, entropy_fluxes = rhs(sol, ms, gas, boundaries, flux_kind, with_entropy_flux=True)
    bundle = entropy_bundle(sol.primitive(gas), gas)
    jac_rhs = jacobian_rhs_vcl1(ms, sol.dxi)
    production = np.sum(bundle.V * residual, axis=0) - bundle.phi * jac_rhs
    for k, qk in enumerate(entropy_fluxes):
        production = production + np.diff(qk, axis=k) / sol.dxi[k]
    return production


def boundary_entropy_flux(entropy_fluxes: Sequence[np.ndarray], dxi: Sequence[float]) -> float:
    """Net entropy flux leaving the computational box."""
    measure = float(np.prod(dxi))
    total = 0.0
    for k, qk in enumerate(entropy_fluxes):
        high = np.take(qk, -1, axis=k)
        low = np.take(qk, 0, axis=k)
        total += float(np.sum(high - low)) * measure / dxi[k]
    return total


def _face_speeds(prim: PrimitiveState, n: np.ndarray, nt: np.ndarray, gas: GasModel) -> np.ndarray:
    rotated = rotate_velocity(prim, velocity_rotation(n))
    L = np.sqrt(np.sum(n * n, axis=0))
    return np.max(np.abs(nt + L * eigenvalues(rotated, gas)), axis=0)


def _cell_faces(n_cells: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.arange(0, n_cells), np.arange(1, n_cells + 1)


def cell_spectral_radius(prim: PrimitiveState, ms: MetricSet, gas: GasModel, k: int) -> np.ndarray:
    """max_j |nt + L lambda_j| / J over the two direction-k faces of every cell.

    The unknowns are JU, so the face speeds are scaled by the cell Jacobian.
    """
    speeds = [
        _face_speeds(prim, np.take(ms.scl[k], idx, axis=1 + k), np.take(ms.nt[k], idx, axis=k), gas)
        for idx in _cell_faces(prim.shape[k])
    ]
    return np.maximum(speeds[0], speeds[1]) / ms.jac


def cell_mesh_speed(nt: np.ndarray, jac: np.ndarray, k: int) -> np.ndarray:
    """max |nt| / J over the two direction-k faces of every cell."""
    lo, hi = _cell_faces(jac.shape[k])
    return np.maximum(np.abs(np.take(nt, lo, axis=k)), np.abs(np.take(nt, hi, axis=k))) / jac


def cfl_dt(sol: SolutionField, ms: MetricSet, gas: GasModel, cfl: float) -> float:
    """Time step cfl / sum_k max_i(rho_k,i / dxi_k), rho_k the cell spectral radius."""
    prim = sol.primitive(gas)
    denom = sum(
        float(np.max(cell_spectral_radius(prim, ms, gas, k))) / sol.dxi[k]
        for k in range(sol.jac.ndim)
    )
    return cfl / denom


def total_entropy(sol: SolutionField, gas: GasModel) -> float:
    """Sum over cells of J eta(U) times the cell measure."""
    eta = entropy_bundle(sol.primitive(gas), gas).eta
    return float(np.sum(sol.jac * eta)) * sol.cell_measure


def jacobian_drift(sol: SolutionField, mesh: StructuredMesh) -> float:
    """l1 distance sum |J - J~| dxi between evolved and direct Jacobians."""
    return float(np.sum(np.abs(sol.jac - jacobian_direct(mesh)))) * sol.cell_measure


@dataclass(frozen=True)
class SolverSettings:
    """Scheme selection for :class:`Solver`.

    Attributes:
        flux_kind: ``ec``, ``es1`` or ``es2``
        vcl: ``vcl1`` or ``vcl2``
        rk: ``rk2`` or ``rk3``
        cfl: Courant number
        monitor_alpha: Monitor gradient weight
        monitor_sigma: Monitor variable, ``rho`` or ``lnrho``
        adaptation: Mesh redistribution settings
    """

    flux_kind: str = "es2"
    vcl: str = "vcl1"
    rk: str = "rk2"
    cfl: float = 0.4
    monitor_alpha: float = 0.0
    monitor_sigma: str = "lnrho"
    adaptation: AdaptationConfig = AdaptationConfig()

    def __post_init__(self) -> None:
        if self.flux_kind not in FLUX_KINDS:
            raise ValidationError(f"Unknown flux kind '{self.flux_kind}'")
        if self.vcl not in VCL_KINDS:
            raise ValidationError(f"Unknown VCL variant '{self.vcl}'")
        if self.rk not in RK_TABLEAUS:
            raise ValidationError(f"Unknown Runge-Kutta scheme '{self.rk}'")
        if not 0.0 < self.cfl <= 1.0:
            raise ValidationError(f"CFL number must lie in (0, 1], got {self.cfl}")


class Solver:
    """Adaptive moving-mesh SSP Runge-Kutta integrator.

    Example:
        >>> solver = Solver(GasModel(), boundaries, SolverSettings(flux_kind="es2"))
        >>> sol, mesh, report = solver.step_ssprk(sol, mesh, time=0.0, t_stop=4.0)
    """

    def __init__(self, gas: GasModel, boundaries: BoundaryConditions, settings: SolverSettings):
        """Initialize the solver.

        Args:
            gas: Equation of state
            boundaries: Boundary kinds of the case
            settings: Scheme selection
        """
        self.gas = gas
        self.boundaries = boundaries
        self.settings = settings

    def _stage_metrics(
        self,
        mesh: StructuredMesh,
        traj: VclTrajectory,
        fraction: float,
        jac: np.ndarray,
        face_terms: Optional[list],
    ) -> MetricSet:
        stage_mesh = mesh.with_nodes(traj.nodes_at(fraction), traj.velocities)
        scl = compute_scl_metrics(stage_mesh)
        if face_terms is not None:
            nt = vcl2_temporal_metrics(face_terms, traj.dt, fraction * traj.dt)
        else:
            nt = temporal_metrics_vcl1(stage_mesh, scl)
        return MetricSet(scl=scl, nt=nt, jac=jac)

    def _choose_step(
        self,
        sol: SolutionField,
        mesh: StructuredMesh,
        displacement: np.ndarray,
        delta_tau: float,
    ) -> Tuple[float, np.ndarray, float, Tuple[float, ...]]:
        """Step length from the flow and mesh-displacement Courant numbers.

        The mesh term sum_k max|nt dt| / (J dxi_k) does not depend on dt; it is
        capped at cfl/2 by shrinking the displacement, and the flow uses the
        remainder of the Courant budget.
        """
        cfl = self.settings.cfl
        dxi = sol.dxi
        scl = compute_scl_metrics(mesh)
        shifted = mesh.with_nodes(mesh.nodes, displacement)
        nt_shift = temporal_metrics_vcl1(shifted, scl)
        mesh_terms = [
            float(np.max(cell_mesh_speed(nt, sol.jac, k))) / dxi[k] for k, nt in enumerate(nt_shift)
        ]
        mesh_courant = sum(mesh_terms)
        cap = 0.5 * cfl
        if mesh_courant > cap:
            scale = cap / mesh_courant
            logger.debug("Mesh Courant number %.3g above %.3g; scaling displacement by %.3g", mesh_courant, cap, scale)
            displacement = displacement * scale
            delta_tau *= scale
            mesh_terms = [term * scale for term in mesh_terms]
            mesh_courant = cap

        static = MetricSet(scl=scl, nt=tuple(np.zeros(nt.shape) for nt in nt_shift), jac=sol.jac)
        prim = sol.primitive(self.gas)
        flow = [float(np.max(cell_spectral_radius(prim, static, self.gas, k))) for k in range(sol.jac.ndim)]
        dt = (cfl - mesh_courant) / sum(f / dxi[k] for k, f in enumerate(flow))
        speeds = tuple(flow[k] + mesh_terms[k] * dxi[k] / dt for k in range(len(flow)))
        return dt, displacement, delta_tau, speeds

    def step_ssprk(
        self,
        sol: SolutionField,
        mesh: StructuredMesh,
        time: float,
        t_stop: Optional[float] = None,
    ) -> Tuple[SolutionField, StructuredMesh, StepReport]:
        """Advance one adaptive time step.

        Moves the mesh, then runs the Runge-Kutta stages with nodes on the
        linear trajectory and metrics rebuilt at every stage time.

        Args:
            sol: Unknowns at t_n
            mesh: Mesh at t_n
            time: t_n
            t_stop: Do not step past this time

        Returns:
            Tuple (unknowns, mesh, report) at t_{n+1}

        Raises:
            TimeStepUnderflowError: If the step collapses
            UnphysicalStateError: If a stage produces an inadmissible state
            TangledMeshError: If a cell volume becomes non-positive
        """
        settings = self.settings
        prim = sol.primitive(self.gas)
        delta_tau, displacement = propose_displacement(
            mesh,
            prim,
            self.boundaries,
            settings.adaptation,
            settings.monitor_alpha,
            settings.monitor_sigma,
        )
        dt, displacement, delta_tau, speeds = self._choose_step(sol, mesh, displacement, delta_tau)
        if t_stop is not None and time + dt > t_stop:
            dt = t_stop - time
        horizon = abs(t_stop) if t_stop else max(1.0, abs(time))
        if not math.isfinite(dt) or dt <= DT_FLOOR * horizon:
            raise TimeStepUnderflowError(dt, time)

        traj = VclTrajectory(start=mesh.nodes, end=mesh.nodes + displacement, dt=dt)
        face_terms = vcl2_face_terms(traj, sol.dxi) if settings.vcl == "vcl2" else None

        ju0, jac0 = sol.ju, sol.jac
        ju, jac = ju0, jac0
        boundary_flux = 0.0
        try:
            for stage, (a, b, c) in enumerate(RK_TABLEAUS[settings.rk]):
                current = SolutionField(ju=ju, jac=jac, dxi=sol.dxi)
                ms = self._stage_metrics(mesh, traj, c, jac, face_terms)
                if stage == 0:
                    d_ju, entropy_fluxes = rhs(
                        current, ms, self.gas, self.boundaries, settings.flux_kind, with_entropy_flux=True
                    )
                    boundary_flux = boundary_entropy_flux(entropy_fluxes, sol.dxi)
                else:
                    d_ju = rhs(current, ms, self.gas, self.boundaries, settings.flux_kind)
                d_jac = jacobian_rhs_vcl1(ms, sol.dxi)
                ju = a * ju0 + b * (ju + dt * d_ju)
                jac = a * jac0 + b * (jac + dt * d_jac)
            new_sol = SolutionField(ju=ju, jac=jac, dxi=sol.dxi)
            new_sol.primitive(self.gas)
        except UnphysicalStateError as e:
            raise e.at_time(time) from e

        new_mesh = mesh.with_nodes(traj.end, traj.velocities)
        report = StepReport(
            time=time + dt,
            dt=dt,
            total_entropy=total_entropy(new_sol, self.gas),
            entropy_flux_boundary=boundary_flux,
            max_wavespeed=speeds,
            jacobian_drift=jacobian_drift(new_sol, new_mesh),
            delta_tau=delta_tau,
        )
        return new_sol, new_mesh, report
