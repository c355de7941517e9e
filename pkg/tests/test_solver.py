"""Tests for the residual, entropy diagnostics and SSP Runge-Kutta stepping."""

import numpy as np
import pytest

from relmesh.adaptation import AdaptationConfig
from relmesh.boundaries import BoundaryConditions, BoundaryKind
from relmesh.exceptions import TimeStepUnderflowError, UnphysicalStateError, ValidationError
from relmesh.metrics import StructuredMesh, build_metric_set, jacobian_direct
from relmesh.physics import GasModel, PrimitiveState
from relmesh.solver import (
    SolutionField,
    Solver,
    SolverSettings,
    StepReport,
    cell_mesh_speed,
    cfl_dt,
    entropy_production,
    rhs,
    total_entropy,
)

GAS = GasModel(5.0 / 3.0)


def _perturbed(cells, amplitude: float = 0.2, seed: int = 0) -> StructuredMesh:
    d = len(cells)
    mesh = StructuredMesh.uniform((0.0,) * d, (1.0,) * d, cells)
    rng = np.random.default_rng(seed)
    interior = (slice(None),) + tuple(slice(1, -1) for _ in range(d))
    nodes = mesh.nodes.copy()
    nodes[interior] += amplitude * rng.uniform(-1.0, 1.0, nodes[interior].shape) / max(cells)
    return mesh.with_nodes(nodes)


def _uniform_state(dims, v) -> PrimitiveState:
    d = len(dims)
    return PrimitiveState(
        np.full(dims, 1.3),
        np.broadcast_to(np.asarray(v, dtype=float).reshape((d,) + (1,) * d), (d,) + tuple(dims)).copy(),
        np.full(dims, 0.7),
    )


def _random_state(dims, seed: int) -> PrimitiveState:
    rng = np.random.default_rng(seed)
    d = len(dims)
    return PrimitiveState(
        rng.uniform(0.5, 2.0, dims),
        rng.uniform(-0.35, 0.35, (d,) + tuple(dims)),
        rng.uniform(0.5, 2.0, dims),
    )


def _moving_metrics(mesh: StructuredMesh, seed: int):
    """Metrics of ``mesh`` with random interior node velocities."""
    rng = np.random.default_rng(seed)
    velocities = np.zeros_like(mesh.nodes)
    interior = (slice(None),) + tuple(slice(1, -1) for _ in range(mesh.dim))
    velocities[interior] = rng.normal(scale=0.5, size=velocities[interior].shape)
    return build_metric_set(mesh.with_nodes(mesh.nodes, velocities))


def _solver(dim: int, **settings) -> Solver:
    defaults = dict(monitor_alpha=20.0, adaptation=AdaptationConfig(mu=5))
    defaults.update(settings)
    return Solver(GAS, BoundaryConditions.uniform(BoundaryKind.PERIODIC, dim), SolverSettings(**defaults))


def test_solver_settings_validation():
    """Test invalid scheme selections are rejected."""
    with pytest.raises(ValidationError):
        SolverSettings(flux_kind="roe")
    with pytest.raises(ValidationError):
        SolverSettings(vcl="vcl3")
    with pytest.raises(ValidationError):
        SolverSettings(rk="rk4")
    with pytest.raises(ValidationError):
        SolverSettings(cfl=1.5)


def test_step_report_rejects_non_positive_dt():
    """Test a report with dt <= 0 is invalid."""
    with pytest.raises(ValidationError):
        StepReport(1.0, 0.0, 0.0, 0.0, (1.0, 1.0), 0.0, 1.0)


def test_solution_field_roundtrip():
    """Test JU / J recovers the primitive state."""
    mesh = _perturbed((6, 5))
    prim = _random_state(mesh.dims, 1)
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    back = sol.primitive(GAS)
    np.testing.assert_allclose(back.rho, prim.rho, rtol=1e-12)
    np.testing.assert_allclose(back.p, prim.p, rtol=1e-11)
    assert sol.cell_measure == pytest.approx(1.0 / 30.0)


@pytest.mark.parametrize("flux_kind", ["ec", "es1", "es2"])
@pytest.mark.parametrize("cells", [(8, 7), (5, 4, 6)])
def test_uniform_state_has_zero_residual_on_static_mesh(flux_kind, cells):
    """Test a constant state on a curvilinear static mesh has zero residual."""
    mesh = _perturbed(cells, seed=2)
    prim = _uniform_state(mesh.dims, [0.3, -0.2, 0.1][: len(cells)])
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    bc = BoundaryConditions.uniform(BoundaryKind.PERIODIC, len(cells))
    residual = rhs(sol, build_metric_set(mesh), GAS, bc, flux_kind)
    assert np.abs(residual).max() <= 1e-11


@pytest.mark.parametrize("cells", [(8, 8), (5, 4, 6)])
def test_ec_flux_conserves_entropy_cellwise(cells):
    """Test the EC scheme produces no entropy in any cell of a moving mesh."""
    mesh = _perturbed(cells, seed=3)
    ms = _moving_metrics(mesh, seed=4)
    sol = SolutionField.from_primitive(_random_state(mesh.dims, 5), ms.jac, GAS, mesh.dxi)
    bc = BoundaryConditions.uniform(BoundaryKind.PERIODIC, len(cells))
    production = entropy_production(sol, ms, GAS, bc, "ec")
    assert np.abs(production).max() <= 1e-9


@pytest.mark.parametrize("flux_kind", ["es1", "es2"])
@pytest.mark.parametrize("cells", [(8, 8), (5, 4, 6)])
def test_es_fluxes_dissipate_entropy_cellwise(flux_kind, cells):
    """Test the ES schemes produce non-positive entropy in every cell."""
    mesh = _perturbed(cells, seed=6)
    ms = _moving_metrics(mesh, seed=7)
    sol = SolutionField.from_primitive(_random_state(mesh.dims, 8), ms.jac, GAS, mesh.dxi)
    bc = BoundaryConditions.uniform(BoundaryKind.PERIODIC, len(cells))
    production = entropy_production(sol, ms, GAS, bc, flux_kind)
    assert production.max() <= 1e-9
    assert production.min() < -1e-6


def test_cfl_dt_scales_with_cfl():
    """Test the CFL step is positive and linear in the Courant number."""
    mesh = _perturbed((10, 10), seed=9)
    ms = build_metric_set(mesh)
    sol = SolutionField.from_primitive(_random_state(mesh.dims, 10), ms.jac, GAS, mesh.dxi)
    dt = cfl_dt(sol, ms, GAS, 0.4)
    assert dt > 0
    assert cfl_dt(sol, ms, GAS, 0.2) == pytest.approx(0.5 * dt)
    # Signals never exceed light speed: dt is at least the light-crossing bound
    assert dt >= 0.4 / (2 * 10 * 1.3 * 2)


def test_cfl_dt_scales_with_cell_size():
    """Test the CFL step grows with the physical cell size at fixed cell count."""
    state = _uniform_state((10, 10), (0.0, 0.0))
    steps = []
    for length in (1.0, 10.0):
        mesh = StructuredMesh.uniform((0.0, 0.0), (length, length), (10, 10))
        ms = build_metric_set(mesh)
        sol = SolutionField.from_primitive(state, ms.jac, GAS, mesh.dxi)
        steps.append(cfl_dt(sol, ms, GAS, 0.4))
    assert steps[1] / steps[0] == pytest.approx(10.0, rel=1e-12)
    # sound speed sqrt(gamma p / (rho h)) crossing a 0.1 cell in each direction
    h = 1.0 + 2.5 * 0.7 / 1.3
    cs = np.sqrt(GAS.gamma * 0.7 / (1.3 * h))
    assert steps[0] == pytest.approx(0.4 * 0.1 / (2 * cs), rel=1e-12)


def test_cell_mesh_speed_scales_with_cell_size():
    """Test the mesh speed per unit Jacobian shrinks with the cell size."""
    speeds = []
    for length in (1.0, 10.0):
        mesh = StructuredMesh.uniform((0.0, 0.0), (length, length), (10, 10))
        velocities = np.zeros_like(mesh.nodes)
        velocities[0] = 0.3
        ms = build_metric_set(mesh.with_nodes(mesh.nodes, velocities))
        speeds.append(cell_mesh_speed(ms.nt[0], ms.jac, 0))
    np.testing.assert_allclose(speeds[0], 0.3, rtol=1e-12)
    np.testing.assert_allclose(speeds[1], 0.1 * speeds[0], rtol=1e-12)


@pytest.mark.parametrize(
    "flux_kind,vcl,rk",
    [
        ("ec", "vcl1", "rk2"),
        ("es1", "vcl1", "rk3"),
        ("es2", "vcl2", "rk2"),
        ("es2", "vcl2", "rk3"),
    ],
)
def test_free_stream_preserved_on_moving_mesh_2d(flux_kind, vcl, rk):
    """Test a uniform flow stays uniform while the mesh moves."""
    mesh = _perturbed((12, 10), amplitude=0.3, seed=11)
    prim = _uniform_state(mesh.dims, [0.3, -0.2])
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    solver = _solver(2, flux_kind=flux_kind, vcl=vcl, rk=rk)

    start_nodes = mesh.nodes.copy()
    time = 0.0
    for _ in range(3):
        sol, mesh, report = solver.step_ssprk(sol, mesh, time)
        time = report.time
        assert report.jacobian_drift <= 1e-12
    assert np.abs(mesh.nodes - start_nodes).max() > 1e-4

    out = sol.primitive(GAS)
    np.testing.assert_allclose(out.rho, prim.rho, rtol=1e-12)
    np.testing.assert_allclose(out.p, prim.p, rtol=1e-11)
    np.testing.assert_allclose(out.v, prim.v, rtol=1e-11, atol=1e-13)


def test_free_stream_and_jacobian_exact_with_vcl2_rk3_in_3d():
    """Test VCL2 with RK3 keeps uniform 3D flow and matches the direct Jacobian."""
    mesh = _perturbed((6, 5, 6), amplitude=0.3, seed=12)
    prim = _uniform_state(mesh.dims, [0.2, 0.4, -0.3])
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    solver = _solver(3, flux_kind="es2", vcl="vcl2", rk="rk3")

    time = 0.0
    for _ in range(2):
        sol, mesh, report = solver.step_ssprk(sol, mesh, time)
        time = report.time
        assert report.jacobian_drift <= 1e-12
        assert report.delta_tau > 0

    out = sol.primitive(GAS)
    np.testing.assert_allclose(out.rho, prim.rho, rtol=1e-11)
    np.testing.assert_allclose(out.v, prim.v, rtol=1e-10, atol=1e-12)


def test_step_conserves_totals_on_periodic_box():
    """Test sum of JU over cells is unchanged by a moving-mesh step."""
    mesh = _perturbed((12, 12), seed=13)
    prim = _random_state(mesh.dims, 14)
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    solver = _solver(2, flux_kind="es2", rk="rk3", cfl=0.3)

    before = sol.ju.sum(axis=(1, 2))
    time = 0.0
    for _ in range(3):
        sol, mesh, report = solver.step_ssprk(sol, mesh, time)
        time = report.time
    after = sol.ju.sum(axis=(1, 2))
    np.testing.assert_allclose(after, before, rtol=1e-12, atol=1e-11)
    assert np.all(np.isfinite(report.max_wavespeed))


def test_step_respects_t_stop():
    """Test the step is shortened to land on t_stop."""
    mesh = StructuredMesh.uniform((0.0, 0.0), (1.0, 1.0), (8, 8))
    prim = _random_state(mesh.dims, 15)
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    solver = _solver(2, adaptation=AdaptationConfig(enabled=False))

    _, _, report = solver.step_ssprk(sol, mesh, 0.0, t_stop=1e-4)
    assert report.time == 1e-4
    assert report.dt == pytest.approx(1e-4)
    assert report.delta_tau == 1.0


@pytest.mark.parametrize("flux_kind", ["es1", "es2"])
def test_periodic_es_steps_decrease_entropy(flux_kind):
    """Test total entropy falls every step of a periodic ES run."""
    mesh = StructuredMesh.uniform((0.0, 0.0), (1.0, 1.0), (16, 16))
    x = mesh.cell_centers()
    rho = np.where(np.hypot(x[0] - 0.5, x[1] - 0.5) < 0.2, 3.0, 1.0)
    prim = PrimitiveState(rho, np.zeros_like(x), np.ones_like(rho))
    sol = SolutionField.from_primitive(prim, jacobian_direct(mesh), GAS, mesh.dxi)
    solver = _solver(2, flux_kind=flux_kind, rk="rk3", cfl=0.3)

    initial = total_entropy(sol, GAS)
    history = [initial]
    time = 0.0
    for _ in range(5):
        sol, mesh, report = solver.step_ssprk(sol, mesh, time)
        time = report.time
        assert report.entropy_flux_boundary == pytest.approx(0.0, abs=1e-10)
        assert report.total_entropy == pytest.approx(total_entropy(sol, GAS), rel=1e-12)
        history.append(report.total_entropy)
    assert np.all(np.diff(history) < 0.0)
    assert history[-1] == pytest.approx(initial, rel=1e-2)


def test_step_underflow():
    """Test a vanishing step raises TimeStepUnderflowError."""
    mesh = StructuredMesh.uniform((0.0, 0.0), (1.0, 1.0), (6, 6))
    sol = SolutionField.from_primitive(_random_state(mesh.dims, 16), jacobian_direct(mesh), GAS, mesh.dxi)
    solver = _solver(2, adaptation=AdaptationConfig(enabled=False))
    with pytest.raises(TimeStepUnderflowError):
        solver.step_ssprk(sol, mesh, 1.0, t_stop=1.0 + 1e-15)


def test_step_rejects_unphysical_input():
    """Test a negative density is reported as an unphysical state."""
    mesh = StructuredMesh.uniform((0.0, 0.0), (1.0, 1.0), (6, 6))
    sol = SolutionField.from_primitive(_random_state(mesh.dims, 17), jacobian_direct(mesh), GAS, mesh.dxi)
    sol.ju[0, 2, 3] = -1.0
    with pytest.raises(UnphysicalStateError) as info:
        _solver(2).step_ssprk(sol, mesh, 0.0)
    assert info.value.cell == (2, 3)
