"""Monitor-driven variational mesh redistribution.

The mesh equations are the Euler-Lagrange equations of a Winslow-type
functional with the isotropic monitor G = omega I, solved by a few Jacobi
sweeps per time step. Boundary nodes slide along their box faces: every
sweep resets the boundary-normal coordinate, which pins the box corners.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .boundaries import BoundaryConditions, BoundaryKind
from .exceptions import TangledMeshError, ValidationError
from .metrics import StructuredMesh, pair_average
from .physics import PrimitiveState

logger = logging.getLogger(__name__)

SIGMA_KINDS = ("rho", "lnrho")


@dataclass(frozen=True)
class AdaptationConfig:
    """Settings of the mesh redistribution step.

    Attributes:
        mu: Jacobi sweeps per time step
        filter_passes: Low-pass filter passes applied to the monitor
        limiter_on: Apply the displacement limiter
        enabled: Move the mesh at all
    """

    mu: int = 10
    filter_passes: int = 2
    limiter_on: bool = True
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValidationError(f"Jacobi iteration count must be >= 0, got {self.mu}")
        if self.filter_passes < 0:
            raise ValidationError(f"Filter passes must be >= 0, got {self.filter_passes}")


@dataclass(frozen=True)
class MonitorField:
    """Cell monitor values and the parameters that produced them.

    Attributes:
        omega: Monitor per cell, shape dims
        alpha: Gradient weight
        sigma_kind: Physical variable the gradient was taken of
        filter_passes: Smoothing passes already applied
    """

    omega: np.ndarray
    alpha: float
    sigma_kind: str = "lnrho"
    filter_passes: int = 0

    def _padded(self, boundaries: Optional[BoundaryConditions]) -> np.ndarray:
        return _pad(self.omega, boundaries)

    def edge_weights(self, boundaries: Optional[BoundaryConditions] = None) -> Tuple[np.ndarray, ...]:
        """Monitor at the midpoints of node-to-node edges in every direction.

        Direction k has N_k+2 edges along k (including the two reaching the
        ghost nodes) and N_m+1 entries along each other axis m.
        """
        padded = self._padded(boundaries)
        out = []
        for k in range(padded.ndim):
            value = padded
            for axis in range(padded.ndim):
                if axis != k:
                    value = pair_average(value, axis)
            out.append(value)
        return tuple(out)

    def node_omega(self, boundaries: Optional[BoundaryConditions] = None) -> np.ndarray:
        """Monitor averaged from the 2^d cells around each node."""
        value = self._padded(boundaries)
        for axis in range(value.ndim):
            value = pair_average(value, axis)
        return value


def _pad(field: np.ndarray, boundaries: Optional[BoundaryConditions]) -> np.ndarray:
    if boundaries is None:
        return np.pad(field, 1, mode="edge")
    return boundaries.pad_scalar(field, 1)


def monitor_variable(prim: PrimitiveState, sigma_kind: str) -> np.ndarray:
    """Return the physical variable sigma the monitor differentiates."""
    if sigma_kind == "rho":
        return prim.rho
    if sigma_kind == "lnrho":
        return np.log(prim.rho)
    raise ValidationError(f"Unknown monitor variable '{sigma_kind}' (expected one of {SIGMA_KINDS})")


def compute_monitor(
    sigma: np.ndarray,
    alpha: float,
    dxi: Sequence[float],
    boundaries: Optional[BoundaryConditions] = None,
    sigma_kind: str = "lnrho",
) -> MonitorField:
    """Evaluate omega = sqrt(1 + alpha |grad sigma| / max |grad sigma|).

    Gradients are central differences in computational space at cell
    centres. A field with zero gradient gives omega = 1.
    """
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(sigma)):
        raise ValidationError("Monitor variable must be finite")
    padded = _pad(sigma, boundaries)
    d = sigma.ndim
    interior = [slice(1, -1)] * d
    grad2 = np.zeros_like(sigma)
    for k in range(d):
        hi = list(interior)
        lo = list(interior)
        hi[k] = slice(2, None)
        lo[k] = slice(None, -2)
        g = (padded[tuple(hi)] - padded[tuple(lo)]) / (2.0 * dxi[k])
        grad2 += g * g
    grad = np.sqrt(grad2)
    peak = float(np.max(grad))
    if peak == 0.0:
        omega = np.ones_like(sigma)
    else:
        omega = np.sqrt(1.0 + alpha * grad / peak)
    return MonitorField(omega=omega, alpha=alpha, sigma_kind=sigma_kind)


def smooth_monitor(
    mf: MonitorField, passes: int, boundaries: Optional[BoundaryConditions] = None
) -> MonitorField:
    """Apply the low-pass filter with weights (1/2)^(|j|_1 + d) ``passes`` times.

    The stencil factorises into the 1D weights (1/4, 1/2, 1/4) per axis.
    """
    omega = mf.omega
    for _ in range(passes):
        for axis in range(omega.ndim):
            pad = [(0, 0)] * omega.ndim
            pad[axis] = (1, 1)
            periodic = boundaries is not None and boundaries.is_periodic(axis)
            padded = np.pad(omega, pad, mode="wrap" if periodic else "edge")
            n = omega.shape[axis]
            lo = np.take(padded, np.arange(0, n), axis=axis)
            mid = np.take(padded, np.arange(1, n + 1), axis=axis)
            hi = np.take(padded, np.arange(2, n + 2), axis=axis)
            omega = 0.25 * lo + 0.5 * mid + 0.25 * hi
    return MonitorField(
        omega=omega,
        alpha=mf.alpha,
        sigma_kind=mf.sigma_kind,
        filter_passes=mf.filter_passes + passes,
    )


def _project_to_box(nodes: np.ndarray, mesh: StructuredMesh) -> None:
    """Reset boundary-normal coordinates to the box faces in place."""
    for k in range(mesh.dim):
        lo = [slice(None)] * mesh.dim
        hi = [slice(None)] * mesh.dim
        lo[k] = 0
        hi[k] = -1
        nodes[k][tuple(lo)] = mesh.lower[k]
        nodes[k][tuple(hi)] = mesh.upper[k]


def jacobi_redistribute(
    mesh: StructuredMesh,
    mf: MonitorField,
    cfg: AdaptationConfig,
    boundaries: Optional[BoundaryConditions] = None,
) -> np.ndarray:
    """Run ``cfg.mu`` Jacobi sweeps of the monitor-weighted mesh equations.

    Each node moves to the omega-weighted mean of its 2d computational
    neighbours from the previous sweep.

    Args:
        mesh: Current mesh
        mf: Monitor, frozen for all sweeps
        cfg: Adaptation settings
        boundaries: Boundary kinds; periodic directions use seam neighbours

    Returns:
        Proposed node coordinates, same shape as ``mesh.nodes``
    """
    if boundaries is None:
        boundaries = BoundaryConditions.uniform(BoundaryKind.OUTFLOW, mesh.dim)
    weights = mf.edge_weights(boundaries)
    d = mesh.dim
    x = mesh.nodes.copy()
    for _ in range(cfg.mu):
        xp = boundaries.pad_nodes(x, mesh.lengths)
        num = np.zeros_like(x)
        den = np.zeros(x.shape[1:])
        for k in range(d):
            n_k = x.shape[1 + k]
            w = weights[k]
            w_minus = np.take(w, np.arange(0, n_k), axis=k)
            w_plus = np.take(w, np.arange(1, n_k + 1), axis=k)
            idx_minus = [slice(None)] + [slice(1, -1)] * d
            idx_plus = list(idx_minus)
            idx_minus[1 + k] = slice(0, n_k)
            idx_plus[1 + k] = slice(2, n_k + 2)
            num += w_minus * xp[tuple(idx_minus)] + w_plus * xp[tuple(idx_plus)]
            den += w_minus + w_plus
        x = num / den
        _project_to_box(x, mesh)
    return x


def displacement_limit(mesh: StructuredMesh, proposed: np.ndarray) -> float:
    """Largest step fraction keeping every node within half a gap of its neighbours.

    Raises:
        TangledMeshError: If the current mesh has a non-positive node gap
    """
    delta = proposed - mesh.nodes
    tau = 1.0
    for l in range(mesh.dim):
        gaps = np.diff(mesh.nodes[l], axis=l)
        if np.any(gaps <= 0):
            cell = tuple(int(i) for i in np.argwhere(gaps <= 0)[0])
            raise TangledMeshError(cell, float(np.min(gaps)))
        n = mesh.nodes.shape[1 + l]
        forward = np.take(delta[l], np.arange(0, n - 1), axis=l)
        backward = np.take(delta[l], np.arange(1, n), axis=l)
        with np.errstate(divide="ignore", invalid="ignore"):
            fwd = np.where(forward > 0, gaps / (2.0 * forward), np.inf)
            bwd = np.where(backward < 0, gaps / (-2.0 * backward), np.inf)
        tau = min(tau, float(np.min(fwd)), float(np.min(bwd)))
    return tau


def limit_displacement(
    mesh: StructuredMesh, proposed: np.ndarray, dt: float
) -> Tuple[float, np.ndarray]:
    """Limit the proposed move and convert it to node velocities.

    Returns:
        Tuple (delta_tau, velocities) with velocities = delta_tau * dx / dt
    """
    tau = displacement_limit(mesh, proposed)
    return tau, tau * (proposed - mesh.nodes) / dt


def propose_displacement(
    mesh: StructuredMesh,
    prim: PrimitiveState,
    boundaries: BoundaryConditions,
    cfg: AdaptationConfig,
    alpha: float,
    sigma_kind: str,
) -> Tuple[float, np.ndarray]:
    """Monitor, smooth, redistribute and limit in one call.

    Returns:
        Tuple (delta_tau, limited displacement per node)
    """
    if not cfg.enabled or cfg.mu == 0:
        return 1.0, np.zeros_like(mesh.nodes)
    mf = compute_monitor(monitor_variable(prim, sigma_kind), alpha, mesh.dxi, boundaries, sigma_kind)
    mf = smooth_monitor(mf, cfg.filter_passes, boundaries)
    proposed = jacobi_redistribute(mesh, mf, cfg, boundaries)
    tau = displacement_limit(mesh, proposed) if cfg.limiter_on else 1.0
    logger.debug("Mesh redistribution: delta_tau=%.4g", tau)
    return tau, tau * (proposed - mesh.nodes)
