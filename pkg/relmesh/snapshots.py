"""Snapshot files, entropy series, VTK export and cut-line sampling.

Snapshot format (plain text, ``%.17g`` so every double round-trips)::

    # relmesh snapshot 1
    # case = vortex
    # time = 2
    # step = 118
    # dims = 40 40
    # config_hash = 3f2a...
    # node_columns = x1 x2
    # cell_columns = rho v1 v2 p jac
    [nodes]
    <one row per node, C order>
    [cells]
    <one row per cell, C order>
"""

import io
import logging
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .exceptions import CutlineError, SnapshotError
from .physics import PrimitiveState

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1"
NUMBER_FORMAT = "%.17g"
SERIES_COLUMNS = ("t", "total_entropy", "dt", "jacobian_drift")
CUTLINE_FIELDS = ("rho", "lnrho", "p", "speed", "jac")

PathLike = Union[str, Path]


@dataclass
class Snapshot:
    """Mesh and cell data at one output time.

    Attributes:
        time: Simulation time
        step: Time-step counter
        case: Case name
        config_hash: Hash of the run configuration
        nodes: Node coordinates, shape (d, N_1+1, ..., N_d+1)
        prim: Cell primitives
        jac: Cell Jacobians
    """

    time: float
    step: int
    case: str
    config_hash: str
    nodes: np.ndarray
    prim: PrimitiveState
    jac: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(self.jac.shape)

    def field(self, name: str) -> np.ndarray:
        """Cell field by name: rho, lnrho, p, speed or jac."""
        if name == "rho":
            return self.prim.rho
        if name == "lnrho":
            return np.log(self.prim.rho)
        if name == "p":
            return self.prim.p
        if name == "speed":
            return np.sqrt(np.sum(self.prim.v * self.prim.v, axis=0))
        if name == "jac":
            return self.jac
        raise CutlineError(f"Unknown field '{name}' (expected one of {', '.join(CUTLINE_FIELDS)})")


def _rows(values: np.ndarray) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, values, fmt=NUMBER_FORMAT)
    return buffer.getvalue()


def write_snapshot(path: PathLike, snap: Snapshot) -> Path:
    """Write ``snap`` to ``path`` in the text snapshot format."""
    path = Path(path)
    d = snap.dim
    header = {
        "case": snap.case,
        "time": NUMBER_FORMAT % snap.time,
        "step": str(snap.step),
        "dims": " ".join(str(n) for n in snap.dims),
        "config_hash": snap.config_hash,
        "node_columns": " ".join(f"x{l + 1}" for l in range(d)),
        "cell_columns": " ".join(["rho"] + [f"v{l + 1}" for l in range(d)] + ["p", "jac"]),
    }
    nodes = snap.nodes.reshape(d, -1).T
    cells = np.concatenate([snap.prim.stack(), snap.jac[None]]).reshape(d + 3, -1).T
    lines = [f"# relmesh snapshot {FORMAT_VERSION}"]
    lines += [f"# {key} = {value}" for key, value in header.items()]
    text = "\n".join(lines) + "\n[nodes]\n" + _rows(nodes) + "[cells]\n" + _rows(cells)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.debug("Wrote snapshot %s", path)
    return path


def read_snapshot(path: PathLike) -> Snapshot:
    """Read a snapshot written by :func:`write_snapshot`.

    Raises:
        SnapshotError: If the file is missing or malformed
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SnapshotError(str(path), f"cannot read ({str(e)})") from e

    header: Dict[str, str] = {}
    sections: Dict[str, List[str]] = {}
    current = None
    for line in text.splitlines():
        if line.startswith("#"):
            if "=" in line:
                key, value = line[1:].split("=", 1)
                header[key.strip()] = value.strip()
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
            continue
        if line.strip():
            if current is None:
                raise SnapshotError(str(path), "data before the first section")
            sections[current].append(line)

    try:
        dims = tuple(int(n) for n in header["dims"].split())
        d = len(dims)
        nodes = np.loadtxt(sections["nodes"], ndmin=2)
        cells = np.loadtxt(sections["cells"], ndmin=2)
        node_shape = tuple(n + 1 for n in dims)
        nodes = nodes.T.reshape((d,) + node_shape)
        cells = cells.T.reshape((d + 3,) + dims)
        return Snapshot(
            time=float(header["time"]),
            step=int(header["step"]),
            case=header["case"],
            config_hash=header["config_hash"],
            nodes=nodes,
            prim=PrimitiveState.from_stack(cells[:-1]),
            jac=cells[-1],
        )
    except (KeyError, ValueError) as e:
        raise SnapshotError(str(path), f"malformed ({str(e)})") from e


# ============================================================================
# Entropy series
# ============================================================================


def write_series(path: PathLike, rows: Sequence[Sequence[float]]) -> Path:
    """Write (t, total_entropy, dt, jacobian_drift) rows as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(rows, dtype=float).reshape(-1, len(SERIES_COLUMNS))
    np.savetxt(path, data, fmt=NUMBER_FORMAT, delimiter=",", header=",".join(SERIES_COLUMNS), comments="")
    return path


def read_series(path: PathLike) -> np.ndarray:
    """Read a series CSV into an array with one row per step."""
    try:
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise SnapshotError(str(path), f"bad series file ({str(e)})") from e


# ============================================================================
# VTK export
# ============================================================================


def write_vtk(path: PathLike, snap: Snapshot) -> Path:
    """Write a legacy ASCII VTK structured grid with cell data."""
    path = Path(path)
    d = snap.dim
    node_shape = snap.nodes.shape[1:]
    extent = list(node_shape) + [1] * (3 - d)
    points = np.zeros((3,) + tuple(node_shape))
    points[:d] = snap.nodes

    def flat(values: np.ndarray) -> np.ndarray:
        return values.reshape(-1, order="F")

    point_rows = np.stack([flat(c) for c in points], axis=1)
    n_cells = int(np.prod(snap.dims))

    velocity = np.zeros((3,) + snap.dims)
    velocity[:d] = snap.prim.v
    parts = [
        "# vtk DataFile Version 3.0",
        f"relmesh {snap.case} t={NUMBER_FORMAT % snap.time}",
        "ASCII",
        "DATASET STRUCTURED_GRID",
        f"DIMENSIONS {extent[0]} {extent[1]} {extent[2]}",
        f"POINTS {point_rows.shape[0]} double",
        _rows(point_rows).rstrip("\n"),
        f"CELL_DATA {n_cells}",
    ]
    for name in ("rho", "p", "jac"):
        parts += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        parts.append(_rows(flat(snap.field(name))[:, None]).rstrip("\n"))
    parts.append("VECTORS velocity double")
    parts.append(_rows(np.stack([flat(c) for c in velocity], axis=1)).rstrip("\n"))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
    return path


# ============================================================================
# Cut lines
# ============================================================================


def _kuhn_simplices(dim: int) -> List[List[Tuple[int, ...]]]:
    """Corner offsets of the d! simplices sharing the main cell diagonal."""
    out = []
    for order in permutations(range(dim)):
        corner = [0] * dim
        path = [tuple(corner)]
        for axis in order:
            corner[axis] = 1
            path.append(tuple(corner))
        out.append(path)
    return out


def _corner(nodes: np.ndarray, offset: Tuple[int, ...], cell: Tuple[int, ...]) -> np.ndarray:
    idx = tuple(c + o for c, o in zip(cell, offset))
    return nodes[(slice(None),) + idx]


def locate_cell(nodes: np.ndarray, point: np.ndarray, tol: float = 1e-10) -> Tuple[int, ...]:
    """Index of a cell whose simplex decomposition contains ``point``.

    Raises:
        CutlineError: If no cell contains the point
    """
    d = nodes.shape[0]
    dims = tuple(n - 1 for n in nodes.shape[1:])
    corners = []
    for offset in np.ndindex(*(2,) * d):
        idx = (slice(None),) + tuple(slice(o, o + n) for o, n in zip(offset, dims))
        corners.append(nodes[idx])
    stacked = np.stack(corners)
    span = float(np.max(nodes) - np.min(nodes)) or 1.0
    slack = tol * span
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    pt = point.reshape((d,) + (1,) * d)
    candidates = np.argwhere(np.all((lo - slack <= pt) & (pt <= hi + slack), axis=0))
    simplices = _kuhn_simplices(d)
    for cell in map(tuple, candidates):
        for simplex in simplices:
            vertices = [_corner(nodes, offset, cell) for offset in simplex]
            edges = np.stack([v - vertices[0] for v in vertices[1:]], axis=1)
            try:
                lam = np.linalg.solve(edges, point - vertices[0])
            except np.linalg.LinAlgError:
                continue
            if np.all(lam >= -tol) and lam.sum() <= 1.0 + tol:
                return tuple(int(i) for i in cell)
    raise CutlineError(f"Point {tuple(float(x) for x in point)} lies outside the mesh")


def emit_cutline(
    snap: Snapshot,
    start: Sequence[float],
    end: Sequence[float],
    samples: int = 200,
    field: str = "rho",
) -> np.ndarray:
    """Sample a cell field along the segment from ``start`` to ``end``.

    Args:
        snap: Snapshot to sample
        start: Segment start point
        end: Segment end point
        samples: Number of equally spaced samples (>= 2)
        field: rho, lnrho, p, speed or jac

    Returns:
        Array of shape (samples, 2) with columns (arc length, value)

    Raises:
        CutlineError: If the segment leaves the mesh or the field is unknown
    """
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    if a.shape != (snap.dim,) or b.shape != (snap.dim,):
        raise CutlineError(f"Line end points must have {snap.dim} coordinates")
    if samples < 2:
        raise CutlineError("A cut line needs at least 2 samples")
    values = snap.field(field)
    length = float(np.linalg.norm(b - a))
    out = np.empty((samples, 2))
    for i, s in enumerate(np.linspace(0.0, 1.0, samples)):
        cell = locate_cell(snap.nodes, a + s * (b - a))
        out[i] = (s * length, values[cell])
    return out


def write_cutline(path: PathLike, samples: np.ndarray, field: str) -> Path:
    """Write cut-line samples as two-column CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, samples, fmt=NUMBER_FORMAT, delimiter=",", header=f"s,{field}", comments="")
    return path
