"""Boundary kinds and ghost-layer padding for cells and nodes."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import ValidationError
from .physics import PrimitiveState

GHOST = 2


class BoundaryKind(str, Enum):
    """Treatment of one side of the computational box."""

    PERIODIC = "periodic"
    OUTFLOW = "outflow"
    SYMMETRY = "symmetry"
    INFLOW = "inflow"


@dataclass(frozen=True)
class BoundaryConditions:
    """Per-axis (low, high) boundary kinds.

    Attributes:
        kinds: One (low, high) pair per direction
        inflow: Fixed primitive state used by INFLOW sides
    """

    kinds: Tuple[Tuple[BoundaryKind, BoundaryKind], ...]
    inflow: Optional[PrimitiveState] = None

    def __post_init__(self) -> None:
        kinds = tuple(
            (BoundaryKind(lo), BoundaryKind(hi)) for lo, hi in self.kinds
        )
        object.__setattr__(self, "kinds", kinds)
        for axis, (lo, hi) in enumerate(kinds):
            if (lo == BoundaryKind.PERIODIC) != (hi == BoundaryKind.PERIODIC):
                raise ValidationError(f"Axis {axis}: periodic boundaries must be paired")
            if BoundaryKind.INFLOW in (lo, hi) and self.inflow is None:
                raise ValidationError(f"Axis {axis}: inflow boundary needs an inflow state")

    @classmethod
    def uniform(cls, kind: BoundaryKind, dim: int) -> "BoundaryConditions":
        return cls(kinds=tuple((kind, kind) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.kinds)

    def is_periodic(self, axis: int) -> bool:
        return self.kinds[axis][0] == BoundaryKind.PERIODIC

    def _ghost_block(self, q: np.ndarray, axis: int, width: int, high: bool) -> np.ndarray:
        kind = self.kinds[axis - 1][1 if high else 0]
        n = q.shape[axis]
        if kind == BoundaryKind.PERIODIC:
            idx = np.arange(width) if high else np.arange(n - width, n)
            return np.take(q, idx, axis=axis)
        if kind == BoundaryKind.OUTFLOW:
            return np.take(q, [n - 1 if high else 0] * width, axis=axis)
        if kind == BoundaryKind.SYMMETRY:
            idx = np.arange(n - 1, n - 1 - width, -1) if high else np.arange(width - 1, -1, -1)
            block = np.take(q, idx, axis=axis)
            block[axis] *= -1.0
            return block
        shape = list(q.shape)
        shape[axis] = width
        state = self.inflow.stack()  # type: ignore[union-attr]
        return np.broadcast_to(state.reshape((-1,) + (1,) * (q.ndim - 1)), shape).copy()

    def pad_cells(self, q: np.ndarray, width: int = GHOST) -> np.ndarray:
        """Pad a stacked primitive field (d+2, *dims) with ghost layers.

        Periodic sides wrap, outflow sides replicate the edge cell, symmetry
        sides mirror with the normal velocity negated, and inflow sides hold
        the fixed inflow state.
        """
        out = q
        for k in range(self.dim):
            axis = k + 1
            out = np.concatenate(
                [
                    self._ghost_block(out, axis, width, high=False),
                    out,
                    self._ghost_block(out, axis, width, high=True),
                ],
                axis=axis,
            )
        return out

    def pad_scalar(self, field: np.ndarray, width: int = 1) -> np.ndarray:
        """Pad a cell scalar: wrap in periodic directions, replicate otherwise."""
        out = field
        for k in range(self.dim):
            pad = [(0, 0)] * field.ndim
            pad[k] = (width, width)
            out = np.pad(out, pad, mode="wrap" if self.is_periodic(k) else "edge")
        return out

    def pad_nodes(self, nodes: np.ndarray, lengths: Sequence[float]) -> np.ndarray:
        """Pad node coordinates (d, *node_shape) by one layer per side.

        Periodic directions copy the neighbours across the seam shifted by
        the box length; other directions mirror across the boundary plane.
        """
        out = nodes
        for k in range(self.dim):
            axis = k + 1
            n = out.shape[axis]
            if self.is_periodic(k):
                low = np.take(out, [n - 2], axis=axis).copy()
                high = np.take(out, [1], axis=axis).copy()
                low[k] -= lengths[k]
                high[k] += lengths[k]
            else:
                low = np.take(out, [1], axis=axis).copy()
                high = np.take(out, [n - 2], axis=axis).copy()
                low[k] = 2.0 * np.take(out[k], [0], axis=k) - low[k]
                high[k] = 2.0 * np.take(out[k], [n - 1], axis=k) - high[k]
            out = np.concatenate([low, out, high], axis=axis)
        return out
