"""Run orchestration: time loop, artifacts, convergence studies, VCL comparison."""

import hashlib
import logging
import math
import os
import time as wallclock
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .adaptation import AdaptationConfig, propose_displacement
from .cases import CaseSpec, get_case
from .config import dump_config
from .exceptions import ConfigError, SolverError
from .metrics import StructuredMesh, jacobian_direct
from .models import RunConfig, RunRecord
from .snapshots import Snapshot, write_snapshot, write_series, write_vtk
from .solver import DT_FLOOR, SolutionField, Solver, SolverSettings, StepReport, jacobian_drift, total_entropy
from .storage import Storage

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_ROOT = "runs"
DRIFT_FLOOR = 1e-300
VCL_COMBINATIONS = (("vcl1", "rk2"), ("vcl1", "rk3"), ("vcl2", "rk2"), ("vcl2", "rk3"))


@dataclass
class RunResult:
    """Outcome of :meth:`Simulation.run`.

    Attributes:
        record: Ledger row of the run
        solution: Unknowns at the final time
        mesh: Mesh at the final time
        time: Final simulation time
        reports: One report per step
        series: Rows (t, total_entropy, dt, jacobian_drift), first row at t = 0
        snapshots: Paths of the snapshot files written
    """

    record: RunRecord
    solution: SolutionField
    mesh: StructuredMesh
    time: float
    reports: List[StepReport] = field(default_factory=list)
    series: List[Tuple[float, float, float, float]] = field(default_factory=list)
    snapshots: List[Path] = field(default_factory=list)


class Simulation:
    """Resolve a RunConfig against its case and run it.

    Example:
        >>> sim = Simulation(RunConfig(case="vortex", cells=(40, 40)))
        >>> result = sim.run()
        >>> result.record.steps
    """

    def __init__(
        self,
        config: RunConfig,
        storage: Optional[Storage] = None,
        output_root: Optional[str] = None,
    ):
        """Initialize a simulation.

        Args:
            config: Run settings; unset values come from the case
            storage: Ledger to record the run in (optional)
            output_root: Parent of the default output directory
        """
        self.config = config
        self.storage = storage
        self.case: CaseSpec = get_case(config.case)
        self.cells = self._resolve_cells(config.cells)
        self.t_final = config.t_final if config.t_final is not None else self.case.final_time
        self.cfl = config.cfl if config.cfl is not None else self.case.cfl
        self.adaptation = AdaptationConfig(
            mu=config.adapt_mu if config.adapt_mu is not None else self.case.mu,
            filter_passes=config.monitor_filter_passes,
            enabled=config.adapt_enabled,
        )
        self.settings = SolverSettings(
            flux_kind=config.flux,
            vcl=config.vcl,
            rk=config.rk,
            cfl=self.cfl,
            monitor_alpha=config.monitor_alpha if config.monitor_alpha is not None else self.case.alpha,
            monitor_sigma=config.monitor_sigma or self.case.sigma,
            adaptation=self.adaptation,
        )
        self.solver = Solver(self.case.gas, self.case.boundaries, self.settings)
        times = config.output_times if config.output_times is not None else self.case.output_times
        self.output_times = tuple(sorted(t for t in times if t <= self.t_final))
        root = output_root or os.getenv("RELMESH_OUTPUT_ROOT") or DEFAULT_OUTPUT_ROOT
        self.output_dir = Path(config.output_dir) if config.output_dir else Path(root) / self.case.name
        self.config_hash = self._compute_config_hash()

    def _resolve_cells(self, cells: Optional[Tuple[int, ...]]) -> Tuple[int, ...]:
        d = self.case.dimension
        if cells is None:
            return self.case.default_cells
        if len(cells) == 1:
            return tuple(cells) * d
        if len(cells) != d:
            raise ConfigError(
                f"cells needs 1 or {d} entries for case '{self.case.name}', got {len(cells)}",
                key="cells",
            )
        return tuple(cells)

    def _compute_config_hash(self) -> str:
        """SHA-256 over the resolved settings in a fixed key order."""
        hasher = hashlib.sha256()
        resolved = {
            "case": self.case.name,
            "cells": self.cells,
            "t_final": self.t_final,
            "cfl": self.cfl,
            "flux": self.settings.flux_kind,
            "vcl": self.settings.vcl,
            "rk": self.settings.rk,
            "alpha": self.settings.monitor_alpha,
            "sigma": self.settings.monitor_sigma,
            "mu": self.adaptation.mu,
            "filter_passes": self.adaptation.filter_passes,
            "adapt": self.adaptation.enabled,
            "initial_sweeps": self.config.adapt_initial_sweeps,
        }
        for key in sorted(resolved):
            hasher.update(key.encode("utf-8"))
            hasher.update(repr(resolved[key]).encode("utf-8"))
        return hasher.hexdigest()

    # ------------------------------------------------------------------ setup

    def initial_state(self) -> Tuple[SolutionField, StructuredMesh]:
        """Project the initial data, optionally after pre-adapting the mesh."""
        gas = self.case.gas
        mesh = self.case.mesh(self.cells)
        if self.adaptation.enabled:
            for sweep in range(self.config.adapt_initial_sweeps):
                prim = self.case.cell_average(mesh)
                tau, disp = propose_displacement(
                    mesh,
                    prim,
                    self.case.boundaries,
                    self.adaptation,
                    self.settings.monitor_alpha,
                    self.settings.monitor_sigma,
                )
                mesh = mesh.with_nodes(mesh.nodes + disp)
                logger.debug("Initial adaptation sweep %d: delta_tau=%.4g", sweep + 1, tau)
        prim = self.case.cell_average(mesh)
        jac = jacobian_direct(mesh)
        return SolutionField.from_primitive(prim, jac, gas, mesh.dxi), mesh

    def _snapshot(self, sol: SolutionField, mesh: StructuredMesh, time: float, step: int) -> Snapshot:
        return Snapshot(
            time=time,
            step=step,
            case=self.case.name,
            config_hash=self.config_hash,
            nodes=mesh.nodes,
            prim=sol.primitive(self.case.gas),
            jac=sol.jac,
        )

    def _write_snapshot(self, sol: SolutionField, mesh: StructuredMesh, time: float, step: int) -> Path:
        snap = self._snapshot(sol, mesh, time, step)
        path = write_snapshot(self.output_dir / f"snapshot_{step:06d}.dat", snap)
        if self.config.output_vtk:
            write_vtk(path.with_suffix(".vtk"), snap)
        logger.info("Wrote snapshot t=%.6g step=%d to %s", time, step, path)
        return path

    # -------------------------------------------------------------------- run

    def run(self, write_outputs: bool = True) -> RunResult:
        """Integrate from t = 0 to the final time.

        Args:
            write_outputs: Write snapshots, series and summary to ``output_dir``

        Returns:
            RunResult with the final state and diagnostics

        Raises:
            SolverError: On step underflow or when max_steps is exceeded
            UnphysicalStateError: If a state becomes inadmissible
            TangledMeshError: If the mesh folds
        """
        record = RunRecord.create(
            self.case.name, self.config_hash, str(self.output_dir) if write_outputs else None
        )
        if self.storage is not None:
            self.storage.save_run(record)
        logger.info(
            "Starting run %s: case=%s cells=%s flux=%s vcl=%s rk=%s adapt=%s hash=%s",
            record.run_id[:8],
            self.case.name,
            "x".join(map(str, self.cells)),
            self.settings.flux_kind,
            self.settings.vcl,
            self.settings.rk,
            "on" if self.adaptation.enabled else "off",
            self.config_hash[:8],
        )
        started = wallclock.perf_counter()
        try:
            result = self._integrate(record, write_outputs)
        except Exception:
            record.status = "failed"
            record.wall_time = wallclock.perf_counter() - started
            if self.storage is not None:
                self.storage.save_run(record)
            raise
        record.status = "completed"
        record.wall_time = wallclock.perf_counter() - started
        if write_outputs:
            self._write_summary(record)
        if self.storage is not None:
            self.storage.save_run(record)
        logger.info(
            "Finished run %s: %d steps in %.2fs, final dt=%.3e",
            record.run_id[:8],
            record.steps,
            record.wall_time,
            record.final_dt,
        )
        return result

    def _integrate(self, record: RunRecord, write_outputs: bool) -> RunResult:
        gas = self.case.gas
        sol, mesh = self.initial_state()
        time, step = 0.0, 0
        tiny = DT_FLOOR * self.t_final
        result = RunResult(record=record, solution=sol, mesh=mesh, time=time)
        result.series.append((0.0, total_entropy(sol, gas), 0.0, jacobian_drift(sol, mesh)))
        pending = [t for t in self.output_times if t > tiny]
        if write_outputs:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            (self.output_dir / "config.txt").write_text(dump_config(self.config))
            if any(t <= tiny for t in self.output_times):
                result.snapshots.append(self._write_snapshot(sol, mesh, 0.0, 0))

        while self.t_final - time > tiny:
            if step >= self.config.max_steps:
                raise SolverError(f"Reached max_steps={self.config.max_steps} at t={time:.6g}")
            t_stop = min(pending[0], self.t_final) if pending else self.t_final
            sol, mesh, report = self.solver.step_ssprk(sol, mesh, time, t_stop)
            step += 1
            time = t_stop if abs(report.time - t_stop) <= tiny else report.time
            result.reports.append(report)
            result.series.append((time, report.total_entropy, report.dt, report.jacobian_drift))
            logger.debug(
                "step=%d t=%.6g dt=%.3e delta_tau=%.3g entropy=%.12e drift=%.3e",
                step,
                time,
                report.dt,
                report.delta_tau,
                report.total_entropy,
                report.jacobian_drift,
            )
            record.steps = step
            record.final_time = time
            record.final_dt = report.dt

            reached = bool(pending) and abs(time - pending[0]) <= tiny
            if reached:
                pending.pop(0)
            every = self.config.output_every
            if write_outputs and (reached or (every and step % every == 0)):
                result.snapshots.append(self._write_snapshot(sol, mesh, time, step))

        if write_outputs:
            write_series(self.output_dir / "entropy.csv", result.series)
        result.solution, result.mesh, result.time = sol, mesh, time
        return result

    def _write_summary(self, record: RunRecord) -> None:
        lines = [
            f"run_id = {record.run_id}",
            f"case = {record.case_name}",
            f"config_hash = {record.config_hash}",
            f"cells = {' '.join(map(str, self.cells))}",
            f"steps = {record.steps}",
            f"final_time = {record.final_time!r}",
            f"final_dt = {record.final_dt!r}",
            f"wall_time = {record.wall_time:.3f}",
            f"status = {record.status}",
        ]
        (self.output_dir / "summary.txt").write_text("\n".join(lines) + "\n")


# ============================================================================
# Error norms and convergence tables
# ============================================================================


@dataclass(frozen=True)
class ErrorNorms:
    """Volume-weighted density errors on one grid."""

    cells: int
    l1: float
    l2: float
    linf: float


def error_norms(case: CaseSpec, sol: SolutionField, mesh: StructuredMesh, time: float) -> ErrorNorms:
    """Density errors against the exact solution at cell centres, weighted by J."""
    rho = sol.primitive(case.gas).rho
    exact = case.exact_at_centers(mesh, time).rho
    err = np.abs(rho - exact)
    volume = np.sum(sol.jac)
    return ErrorNorms(
        cells=mesh.dims[0],
        l1=float(np.sum(err * sol.jac) / volume),
        l2=float(math.sqrt(np.sum(err * err * sol.jac) / volume)),
        linf=float(np.max(err)),
    )


def _order(coarse: float, fine: float, ratio: float) -> float:
    if coarse <= 0 or fine <= 0:
        return float("nan")
    return math.log(coarse / fine) / math.log(ratio)


@dataclass
class ConvergenceTable:
    """Errors and observed orders over a grid sequence."""

    case: str
    rows: List[ErrorNorms]

    def orders(self) -> List[Tuple[float, float, float]]:
        """Orders log(e_coarse / e_fine) / log(N_fine / N_coarse); NaN on the first row."""
        out = [(float("nan"),) * 3]
        for prev, cur in zip(self.rows, self.rows[1:]):
            ratio = cur.cells / prev.cells
            out.append(
                (
                    _order(prev.l1, cur.l1, ratio),
                    _order(prev.l2, cur.l2, ratio),
                    _order(prev.linf, cur.linf, ratio),
                )
            )
        return out

    def to_text(self) -> str:
        """Aligned table with columns N, l1, order, l2, order, linf, order."""

        def fmt_order(value: float) -> str:
            return "   -  " if math.isnan(value) else f"{value:6.2f}"

        lines = [f"{'N':>6} | {'l1 error':>10} {'order':>6} | {'l2 error':>10} {'order':>6} | {'linf error':>10} {'order':>6}"]
        for row, (o1, o2, oi) in zip(self.rows, self.orders()):
            lines.append(
                f"{row.cells:>6} | {row.l1:10.3e} {fmt_order(o1)} | {row.l2:10.3e} {fmt_order(o2)} | "
                f"{row.linf:10.3e} {fmt_order(oi)}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["N,l1,l1_order,l2,l2_order,linf,linf_order"]
        for row, (o1, o2, oi) in zip(self.rows, self.orders()):
            lines.append(f"{row.cells},{row.l1!r},{o1!r},{row.l2!r},{o2!r},{row.linf!r},{oi!r}")
        return "\n".join(lines) + "\n"


def convergence_table(
    base: RunConfig,
    grids: Sequence[int],
    zero_time: bool = False,
) -> ConvergenceTable:
    """Run ``base`` on N^d grids for every N in ``grids`` and tabulate errors in rho.

    Args:
        base: Configuration shared by all runs
        grids: Cells per direction, increasing
        zero_time: Measure the projection error of the initial data only

    Raises:
        ConfigError: If the case has no exact solution or grids are not increasing
    """
    case = get_case(base.case)
    if case.exact is None:
        raise ConfigError(f"Case '{case.name}' has no exact solution for a convergence study", key="case")
    if list(grids) != sorted(set(grids)):
        raise ConfigError("Convergence grids must be strictly increasing", key="cells")
    rows = []
    for n in grids:
        sim = Simulation(base.with_overrides(cells=(n,)))
        if zero_time:
            sol, mesh = sim.initial_state()
            time = 0.0
        else:
            result = sim.run(write_outputs=False)
            sol, mesh, time = result.solution, result.mesh, result.time
        norms = error_norms(case, sol, mesh, time)
        logger.info("N=%d l1=%.3e l2=%.3e linf=%.3e", n, norms.l1, norms.l2, norms.linf)
        rows.append(norms)
    return ConvergenceTable(case=case.name, rows=rows)


# ============================================================================
# VCL comparison
# ============================================================================


def emit_vcl_comparison(
    base: RunConfig, output_dir: Optional[Path] = None
) -> Dict[Tuple[str, str], np.ndarray]:
    """Jacobian discrepancy histories for every (VCL, RK) combination.

    Args:
        base: Configuration shared by the four runs
        output_dir: Write one ``vcl_<vcl>_<rk>.csv`` per combination here

    Returns:
        Mapping (vcl, rk) -> array of rows (t, log10 ||J - J~||_l1)
    """
    out = {}
    for vcl, rk in VCL_COMBINATIONS:
        sim = Simulation(base.with_overrides(vcl=vcl, rk=rk))
        result = sim.run(write_outputs=False)
        series = np.array([(row[0], math.log10(max(row[3], DRIFT_FLOOR))) for row in result.series])
        out[(vcl, rk)] = series
        logger.info("VCL comparison %s/%s: max log10 drift %.2f", vcl, rk, float(series[:, 1].max()))
        if output_dir is not None:
            path = Path(output_dir) / f"vcl_{vcl}_{rk}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(path, series, fmt="%.17g", delimiter=",", header="t,log10_drift", comments="")
    return out
