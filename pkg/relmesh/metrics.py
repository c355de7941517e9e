"""Conservative-metric discretisation of the geometric conservation laws.

Node arrays are component-first: ``nodes[l]`` holds coordinate x_l at the
node indices, with shape ``(N_1+1, ..., N_d+1)``. Face quantities in
direction k have ``N_k+1`` entries along axis k and ``N_m`` along every
other axis m. Spatial metrics of direction k are stacked as ``(d, *face)``.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import TangledMeshError, ValidationError
from .fluxes import InterfaceMetrics

FaceArrays = Tuple[np.ndarray, ...]


def _diff(arr: np.ndarray, axis: int) -> np.ndarray:
    return np.diff(arr, axis=axis)


def pair_average(arr: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (arr[tuple(lo)] + arr[tuple(hi)])


def _face_average(node_field: np.ndarray, k: int, offset: int = 0) -> np.ndarray:
    """Average node values over the corners of every face of direction k."""
    out = node_field
    for axis in range(node_field.ndim - offset):
        if axis != k:
            out = pair_average(out, axis + offset)
    return out


@dataclass
class StructuredMesh:
    """Logically rectangular moving mesh.

    Attributes:
        nodes: Physical node coordinates, shape (d, N_1+1, ..., N_d+1)
        velocities: Node velocities, same shape as nodes
        lower: Lower corner of the physical box
        upper: Upper corner of the physical box
    """

    nodes: np.ndarray
    velocities: Optional[np.ndarray] = None
    lower: Tuple[float, ...] = field(default=())
    upper: Tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        self.nodes = np.asarray(self.nodes, dtype=float)
        d = self.nodes.shape[0]
        if self.nodes.ndim != d + 1 or d not in (2, 3):
            raise ValidationError(f"Node array shape {self.nodes.shape} is not (d, ...) with d in (2, 3)")
        if self.velocities is None:
            self.velocities = np.zeros_like(self.nodes)
        if not self.lower:
            self.lower = tuple(float(self.nodes[k].min()) for k in range(d))
        if not self.upper:
            self.upper = tuple(float(self.nodes[k].max()) for k in range(d))

    @classmethod
    def uniform(
        cls, lower: Sequence[float], upper: Sequence[float], cells: Sequence[int]
    ) -> "StructuredMesh":
        """Create a uniform Cartesian mesh of the box [lower, upper]."""
        if len(lower) != len(upper) or len(lower) != len(cells):
            raise ValidationError("lower, upper and cells must have equal length")
        axes = [np.linspace(lo, hi, n + 1) for lo, hi, n in zip(lower, upper, cells)]
        nodes = np.array(np.meshgrid(*axes, indexing="ij"))
        return cls(nodes=nodes, lower=tuple(map(float, lower)), upper=tuple(map(float, upper)))

    @property
    def dim(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def dims(self) -> Tuple[int, ...]:
        """Cell counts per direction."""
        return tuple(n - 1 for n in self.nodes.shape[1:])

    @property
    def dxi(self) -> Tuple[float, ...]:
        return tuple(1.0 / n for n in self.dims)

    @property
    def lengths(self) -> Tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    def with_nodes(
        self, nodes: np.ndarray, velocities: Optional[np.ndarray] = None
    ) -> "StructuredMesh":
        """Return a copy placed at ``nodes`` on the same box."""
        return replace(
            self,
            nodes=np.asarray(nodes, dtype=float),
            velocities=np.zeros_like(nodes) if velocities is None else velocities,
        )

    def cell_centers(self) -> np.ndarray:
        """Mean of the 2^d corner nodes of every cell, shape (d, *dims)."""
        out = self.nodes
        for axis in range(self.dim):
            out = pair_average(out, axis + 1)
        return out


@dataclass(frozen=True)
class MetricSet:
    """Interface metrics and cell Jacobians for one mesh position.

    Attributes:
        scl: Spatial metrics per direction, each (d, *face_shape_k)
        nt: Temporal metrics per direction, each face_shape_k
        jac: Cell Jacobians, shape dims
    """

    scl: FaceArrays
    nt: FaceArrays
    jac: np.ndarray

    def interface(self, k: int) -> InterfaceMetrics:
        return InterfaceMetrics(n=self.scl[k], nt=self.nt[k])


@dataclass(frozen=True)
class VclTrajectory:
    """Linear-in-time node trajectory over one step.

    Attributes:
        start: Nodes at t_n
        end: Nodes at t_{n+1}
        dt: Step length
    """

    start: np.ndarray
    end: np.ndarray
    dt: float

    def nodes_at(self, fraction: float) -> np.ndarray:
        """Node positions at t_n + fraction * dt."""
        return self.start + fraction * (self.end - self.start)

    @property
    def velocities(self) -> np.ndarray:
        return (self.end - self.start) / self.dt

    def snapshots(self) -> List[np.ndarray]:
        """Nodes at t_n, t_n + dt/3, t_n + 2dt/3 and t_{n+1}."""
        return [self.nodes_at(f) for f in (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)]


def _scl_from_nodes(nodes: np.ndarray, dxi: Sequence[float]) -> FaceArrays:
    d = nodes.shape[0]
    x = nodes
    if d == 2:
        face1 = np.stack([_diff(x[1], 1), -_diff(x[0], 1)]) / dxi[1]
        face2 = np.stack([-_diff(x[1], 0), _diff(x[0], 0)]) / dxi[0]
        return (face1, face2)

    families = []
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        rows = []
        for l in range(3):
            m, n = (l + 1) % 3, (l + 2) % 3
            term = _diff(_diff(x[m], a) * pair_average(x[n], a), b) - _diff(
                _diff(x[m], b) * pair_average(x[n], b), a
            )
            rows.append(term / (dxi[a] * dxi[b]))
        families.append(np.stack(rows))
    return tuple(families)


def compute_scl_metrics(mesh: StructuredMesh) -> FaceArrays:
    """Spatial metrics J dxi_k/dx_l at every face by the conservative formulas.

    Args:
        mesh: Mesh at the current stage position

    Returns:
        One (d, *face_shape_k) array per direction k
    """
    return _scl_from_nodes(mesh.nodes, mesh.dxi)


def scl_residual(scl: Sequence[np.ndarray], dxi: Sequence[float]) -> np.ndarray:
    """Discrete SCL residual sum_k delta_k[J dxi_k/dx_l] / dxi_k, shape (d, *dims)."""
    return sum(_diff(metric, 1 + k) / dxi[k] for k, metric in enumerate(scl))


def temporal_metrics_vcl1(mesh: StructuredMesh, scl: Sequence[np.ndarray]) -> FaceArrays:
    """Temporal metrics -sum_l xdot_l J dxi_k/dx_l with face-averaged node velocities."""
    out = []
    for k, metric in enumerate(scl):
        xdot = _face_average(mesh.velocities, k, offset=1)
        out.append(-np.sum(xdot * metric, axis=0))
    return tuple(out)


def jacobian_rhs_vcl1(ms: MetricSet, dxi: Sequence[float]) -> np.ndarray:
    """dJ/dt = -sum_k delta_k[nt_k] / dxi_k per cell."""
    return -sum(_diff(nt, k) / dxi[k] for k, nt in enumerate(ms.nt))


def face_volume_terms(nodes: np.ndarray, dxi: Sequence[float]) -> FaceArrays:
    """Divergence-form Jacobian terms A_k = -(J dxi_k/dx_d) * mean face x_d."""
    scl = _scl_from_nodes(nodes, dxi)
    last = nodes.shape[0] - 1
    return tuple(
        -metric[last] * _face_average(nodes[last], k) for k, metric in enumerate(scl)
    )


def vcl2_face_terms(traj: VclTrajectory, dxi: Sequence[float]) -> List[FaceArrays]:
    """A_k at the four trajectory snapshots t_n, t_n+dt/3, t_n+2dt/3, t_{n+1}."""
    return [face_volume_terms(nodes, dxi) for nodes in traj.snapshots()]


def vcl2_temporal_metrics(
    face_terms: Sequence[FaceArrays], dt: float, elapsed: float
) -> FaceArrays:
    """Temporal metrics nt_k = dA_k/dt from the cubic through the four snapshots.

    Args:
        face_terms: Output of :func:`vcl2_face_terms`
        dt: Step length
        elapsed: Time since t_n at which to evaluate

    Returns:
        One face array per direction
    """
    a0, a1, a2, a3 = face_terms
    tau = elapsed
    out = []
    for k in range(len(a0)):
        c0 = -11.0 * a0[k] + 18.0 * a1[k] - 9.0 * a2[k] + 2.0 * a3[k]
        c1 = 2.0 * a0[k] - 5.0 * a1[k] + 4.0 * a2[k] - a3[k]
        c2 = a0[k] - 3.0 * a1[k] + 3.0 * a2[k] - a3[k]
        rate = dt * dt * c0 + 18.0 * dt * c1 * tau - 27.0 * c2 * tau * tau
        out.append(rate / (2.0 * dt**3))
    return tuple(out)


def jacobian_direct(mesh: StructuredMesh, dxi: Optional[Sequence[float]] = None) -> np.ndarray:
    """Reference Jacobian -sum_k delta_k[A_k] / dxi_k.

    Raises:
        TangledMeshError: If any cell has a non-positive Jacobian
    """
    dxi = mesh.dxi if dxi is None else dxi
    terms = face_volume_terms(mesh.nodes, dxi)
    jac = -sum(_diff(a, k) / dxi[k] for k, a in enumerate(terms))
    bad = ~(jac > 0)
    if np.any(bad):
        cell = tuple(int(i) for i in np.argwhere(bad)[0])
        raise TangledMeshError(cell, float(jac[cell]))
    return jac


def build_metric_set(
    mesh: StructuredMesh,
    nt: Optional[FaceArrays] = None,
    jac: Optional[np.ndarray] = None,
) -> MetricSet:
    """Assemble spatial metrics with VCL1 temporal metrics unless ``nt`` is given."""
    scl = compute_scl_metrics(mesh)
    if nt is None:
        nt = temporal_metrics_vcl1(mesh, scl)
    if jac is None:
        jac = jacobian_direct(mesh)
    return MetricSet(scl=scl, nt=nt, jac=jac)
