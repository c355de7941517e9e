"""Data models for relmesh runs."""

import time
import uuid
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from .exceptions import ConfigError

FLUX_CHOICES = ("ec", "es1", "es2")
VCL_CHOICES = ("vcl1", "vcl2")
RK_CHOICES = ("rk2", "rk3")
SIGMA_CHOICES = ("rho", "lnrho")
MIN_CELLS = 4


@dataclass(frozen=True)
class RunConfig:
    """Settings of one run; ``None`` means "use the case default".

    Attributes:
        case: Registry name of the case
        cells: Cells per direction
        cfl: Courant number
        flux: Interface flux, ``ec``, ``es1`` or ``es2``
        vcl: Temporal-metric variant, ``vcl1`` or ``vcl2``
        rk: Runge-Kutta scheme, ``rk2`` or ``rk3``
        adapt_enabled: Move the mesh
        adapt_mu: Jacobi sweeps per step
        adapt_initial_sweeps: Adaptation passes applied before t = 0
        monitor_alpha: Monitor gradient weight
        monitor_sigma: Monitor variable
        monitor_filter_passes: Monitor smoothing passes
        t_final: End time
        output_dir: Directory for snapshots and series
        output_every: Snapshot every N steps (0 disables)
        output_times: Snapshot times
        output_vtk: Also write VTK files
        max_steps: Abort after this many steps
    """

    case: str
    cells: Optional[Tuple[int, ...]] = None
    cfl: Optional[float] = None
    flux: str = "es2"
    vcl: str = "vcl1"
    rk: str = "rk2"
    adapt_enabled: bool = True
    adapt_mu: Optional[int] = None
    adapt_initial_sweeps: int = 0
    monitor_alpha: Optional[float] = None
    monitor_sigma: Optional[str] = None
    monitor_filter_passes: int = 2
    t_final: Optional[float] = None
    output_dir: Optional[str] = None
    output_every: int = 0
    output_times: Optional[Tuple[float, ...]] = None
    output_vtk: bool = False
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        if not self.case:
            raise ConfigError("case is required", key="case")
        for key, value, choices in (
            ("flux", self.flux, FLUX_CHOICES),
            ("vcl", self.vcl, VCL_CHOICES),
            ("rk", self.rk, RK_CHOICES),
        ):
            if value not in choices:
                raise ConfigError(
                    f"invalid {key} '{value}' (expected one of {', '.join(choices)})", key=key
                )
        if self.monitor_sigma is not None and self.monitor_sigma not in SIGMA_CHOICES:
            raise ConfigError(f"invalid monitor.sigma '{self.monitor_sigma}'", key="monitor.sigma")
        if self.cells is not None and any(n < MIN_CELLS for n in self.cells):
            raise ConfigError(f"cells must be >= {MIN_CELLS} per direction", key="cells")
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}", key="cfl")
        if self.t_final is not None and not self.t_final > 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}", key="t_final")
        if self.monitor_alpha is not None and self.monitor_alpha < 0:
            raise ConfigError("monitor.alpha must be >= 0", key="monitor.alpha")
        for key, value in (
            ("adapt.mu", self.adapt_mu),
            ("adapt.initial_sweeps", self.adapt_initial_sweeps),
            ("monitor.filter_passes", self.monitor_filter_passes),
            ("output.every", self.output_every),
        ):
            if value is not None and value < 0:
                raise ConfigError(f"{key} must be >= 0, got {value}", key=key)
        if self.max_steps <= 0:
            raise ConfigError("max_steps must be positive", key="max_steps")
        if self.output_times is not None and any(t < 0 for t in self.output_times):
            raise ConfigError("output.times must be non-negative", key="output.times")

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with every non-``None`` override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        """Field values keyed by field name, in declaration order."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RunRecord:
    """One row of the run ledger.

    Attributes:
        run_id: Unique run identifier
        case_name: Registry name of the case
        config_hash: SHA-256 of the resolved configuration
        started_at: Unix timestamp in milliseconds
        wall_time: Seconds spent in the run
        steps: Completed time steps
        final_time: Simulation time reached
        final_dt: Last step length
        status: ``running``, ``completed`` or ``failed``
        output_dir: Where artifacts were written
    """

    run_id: str
    case_name: str
    config_hash: str
    started_at: int
    wall_time: float = 0.0
    steps: int = 0
    final_time: float = 0.0
    final_dt: float = 0.0
    status: str = "running"
    output_dir: Optional[str] = None

    @classmethod
    def create(
        cls, case_name: str, config_hash: str, output_dir: Optional[str] = None
    ) -> "RunRecord":
        """Create a new record stamped with the current time.

        Args:
            case_name: Case being run
            config_hash: Hash of the resolved configuration
            output_dir: Artifact directory

        Returns:
            New RunRecord in status ``running``
        """
        return cls(
            run_id=uuid.uuid4().hex[:16],
            case_name=case_name,
            config_hash=config_hash,
            started_at=int(time.time() * 1000),
            output_dir=output_dir,
        )

    def __str__(self) -> str:
        return f"RunRecord({self.run_id[:8]}, {self.case_name}, {self.status})"
