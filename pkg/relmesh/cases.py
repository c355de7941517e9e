"""Initial data, boundaries and exact solutions of the benchmark problems.

Every constructor returns a :class:`CaseSpec`; :func:`get_case` resolves a
registry name the way the CLI addresses cases.
"""

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .boundaries import BoundaryConditions, BoundaryKind
from .exceptions import CaseNotFoundError, ValidationError
from .metrics import StructuredMesh
from .physics import ConservedState, GasModel, PrimitiveState, cons_to_prim, prim_to_cons

InitialData = Callable[[np.ndarray], PrimitiveState]
ExactSolution = Callable[[np.ndarray, float], PrimitiveState]

GAMMA = 5.0 / 3.0

# Gauss abscissae on [0, 1] for the 2-point rule
_GAUSS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


@dataclass(frozen=True)
class CaseSpec:
    """Everything needed to set up and judge one benchmark run.

    Attributes:
        name: Registry name
        dimension: Spatial dimension (2 or 3)
        lower: Lower corner of the physical box
        upper: Upper corner of the physical box
        default_cells: Grid used when the run does not override it
        final_time: End time of the run
        initial: Maps coordinates (d, ...) to primitive data
        boundaries: Boundary kind per side
        gamma: Adiabatic index
        alpha: Monitor gradient weight
        sigma: Monitor variable, ``rho`` or ``lnrho``
        mu: Jacobi sweeps per step
        cfl: Courant number
        exact: Exact solution (x, t) -> primitives, None for qualitative cases
        output_times: Times at which snapshots are written
        description: One-line summary shown by ``list-cases``
    """

    name: str
    dimension: int
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    default_cells: Tuple[int, ...]
    final_time: float
    initial: InitialData
    boundaries: BoundaryConditions
    gamma: float = GAMMA
    alpha: float = 20.0
    sigma: str = "rho"
    mu: int = 10
    cfl: float = 0.4
    exact: Optional[ExactSolution] = None
    output_times: Tuple[float, ...] = ()
    description: str = ""

    def __post_init__(self) -> None:
        d = self.dimension
        if d not in (2, 3):
            raise ValidationError(f"Case '{self.name}': dimension must be 2 or 3, got {d}")
        if len(self.lower) != d or len(self.upper) != d or len(self.default_cells) != d:
            raise ValidationError(f"Case '{self.name}': box and grid must have {d} entries")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValidationError(f"Case '{self.name}': degenerate domain")
        if not self.final_time > 0:
            raise ValidationError(f"Case '{self.name}': final time must be positive")
        if self.boundaries.dim != d:
            raise ValidationError(f"Case '{self.name}': boundary kinds do not match dimension")

    @property
    def gas(self) -> GasModel:
        return GasModel(self.gamma)

    @property
    def qualitative(self) -> bool:
        """True when no exact solution is available."""
        return self.exact is None

    def mesh(self, cells: Optional[Sequence[int]] = None) -> StructuredMesh:
        """Uniform mesh of the case box."""
        return StructuredMesh.uniform(self.lower, self.upper, cells or self.default_cells)

    def cell_average(self, mesh: StructuredMesh) -> PrimitiveState:
        """Initial primitives from conserved averages over 2^d Gauss points per cell."""
        return project_cell_average(self.initial, mesh, self.gas)

    def exact_at_centers(self, mesh: StructuredMesh, time: float) -> PrimitiveState:
        """Exact solution sampled at the cell centres of ``mesh``."""
        if self.exact is None:
            raise ValidationError(f"Case '{self.name}' has no exact solution")
        return self.exact(mesh.cell_centers(), time)


def _cell_map(mesh: StructuredMesh, point: Sequence[float]) -> np.ndarray:
    """Multilinear image of reference point ``point`` in [0,1]^d for every cell."""
    dims = mesh.dims
    out = np.zeros((mesh.dim,) + dims)
    for corner in product((0, 1), repeat=mesh.dim):
        weight = 1.0
        idx = [slice(None)]
        for axis, c in enumerate(corner):
            weight *= point[axis] if c else 1.0 - point[axis]
            idx.append(slice(c, c + dims[axis]))
        out += weight * mesh.nodes[tuple(idx)]
    return out


def project_cell_average(initial: InitialData, mesh: StructuredMesh, gas: GasModel) -> PrimitiveState:
    """Average ``initial`` in conserved variables with the tensor 2-point Gauss rule."""
    total = None
    count = 0
    for point in product(_GAUSS, repeat=mesh.dim):
        cons = prim_to_cons(initial(_cell_map(mesh, point)), gas).stack()
        total = cons if total is None else total + cons
        count += 1
    return cons_to_prim(ConservedState.from_stack(total / count), gas)


def _wrap(x: np.ndarray, lower: Sequence[float], upper: Sequence[float]) -> np.ndarray:
    lo = np.asarray(lower, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
    span = np.asarray(upper, dtype=float).reshape(lo.shape) - lo
    return lo + np.mod(x - lo, span)


def _uniform_state(shape: Tuple[int, ...], rho: float, v: Sequence[float], p: float) -> PrimitiveState:
    return PrimitiveState(
        rho=np.full(shape, rho),
        v=np.stack([np.full(shape, vk) for vk in v]),
        p=np.full(shape, p),
    )


def _select(mask: np.ndarray, inside: PrimitiveState, outside: PrimitiveState) -> PrimitiveState:
    return PrimitiveState(
        rho=np.where(mask, inside.rho, outside.rho),
        v=np.where(mask, inside.v, outside.v),
        p=np.where(mask, inside.p, outside.p),
    )


# ============================================================================
# Isentropic vortex
# ============================================================================


def vortex_profile(x: np.ndarray, w: float, epsilon: float, gamma: float = GAMMA) -> PrimitiveState:
    """Boosted isentropic vortex at t = 0 on unbounded coordinates."""
    lorentz = 1.0 / math.sqrt(1.0 - w * w)
    shift = 0.5 * (lorentz - 1.0) * (x[0] + x[1])
    xt1 = x[0] + shift - 1.0
    xt2 = x[1] + shift - 1.0
    r2 = xt1 * xt1 + xt2 * xt2
    c1 = (gamma - 1.0) / gamma / (8.0 * math.pi**2) * epsilon**2
    decay = c1 * np.exp(1.0 - r2)
    rho = (1.0 - decay) ** (1.0 / (gamma - 1.0))
    c2 = 2.0 * gamma * decay / (2.0 * gamma - 1.0 - gamma * decay)
    f = np.sqrt(c2 / (1.0 + c2 * r2))
    vt1, vt2 = -xt2 * f, xt1 * f
    vt_sum = vt1 + vt2
    scale = 1.0 / (1.0 - w * vt_sum / math.sqrt(2.0))
    common = -w / math.sqrt(2.0) + lorentz * w * w / (2.0 * (lorentz + 1.0)) * vt_sum
    v1 = scale * (vt1 / lorentz + common)
    v2 = scale * (vt2 / lorentz + common)
    return PrimitiveState(rho=rho, v=np.stack([v1, v2]), p=rho**gamma)


def case_vortex_2d(w: float = 0.5 * math.sqrt(2.0), epsilon: float = 5.0) -> CaseSpec:
    """Relativistic isentropic vortex advected with speed w along (-1, -1).

    Args:
        w: Advection speed
        epsilon: Vortex strength
    """
    if not 0.0 <= w < 1.0:
        raise ValidationError(f"Vortex speed must lie in [0, 1), got {w}")
    lower, upper = (-5.0, -5.0), (5.0, 5.0)
    drift = w / math.sqrt(2.0)

    def initial(x: np.ndarray) -> PrimitiveState:
        return vortex_profile(x, w, epsilon)

    def exact(x: np.ndarray, t: float) -> PrimitiveState:
        return vortex_profile(_wrap(x + drift * t, lower, upper), w, epsilon)

    return CaseSpec(
        name="vortex",
        dimension=2,
        lower=lower,
        upper=upper,
        default_cells=(40, 40),
        final_time=4.0,
        initial=initial,
        boundaries=BoundaryConditions.uniform(BoundaryKind.PERIODIC, 2),
        alpha=20.0,
        sigma="rho",
        mu=3,
        cfl=0.4,
        exact=exact,
        output_times=(0.0, 2.0, 4.0),
        description="2D isentropic vortex, periodic, exact solution",
    )


# ============================================================================
# 2D Riemann problems
# ============================================================================

# (rho, v1, v2, p) in the quadrants x1>0.5,x2>0.5 / x1<0.5,x2>0.5 / x1<0.5,x2<0.5 / x1>0.5,x2<0.5
RIEMANN_QUADRANTS: Dict[str, Tuple[Tuple[float, float, float, float], ...]] = {
    "RP1": (
        (0.5, 0.5, -0.5, 5.0),
        (1.0, 0.5, 0.5, 5.0),
        (3.0, -0.5, 0.5, 5.0),
        (1.5, -0.5, -0.5, 5.0),
    ),
    "RP2": (
        (1.0, 0.0, 0.0, 1.0),
        (0.5771, -0.3529, 0.0, 0.4),
        (1.0, -0.3529, -0.3529, 1.0),
        (0.5771, 0.0, -0.3529, 0.4),
    ),
    "RP3": (
        (0.035145216124503, 0.0, 0.0, 0.162931056509027),
        (0.1, 0.7, 0.0, 1.0),
        (0.5, 0.0, 0.0, 1.0),
        (0.1, 0.0, 0.7, 1.0),
    ),
}

_RIEMANN_TITLES = {
    "RP1": "four contact discontinuities",
    "RP2": "four rarefaction waves",
    "RP3": "two shocks and two contacts",
}


def case_riemann2d(which: str = "RP1") -> CaseSpec:
    """Four-quadrant Riemann problem on the unit square.

    Args:
        which: ``RP1``, ``RP2`` or ``RP3``
    """
    key = which.upper()
    if key not in RIEMANN_QUADRANTS:
        raise CaseNotFoundError(which, sorted(RIEMANN_QUADRANTS))
    ne, nw, sw, se = RIEMANN_QUADRANTS[key]

    def initial(x: np.ndarray) -> PrimitiveState:
        trailing = (1,) * (x.ndim - 1)
        east = x[0] > 0.5
        north = x[1] > 0.5
        stacked = np.where(
            east,
            np.where(north, np.reshape(ne, (4,) + trailing), np.reshape(se, (4,) + trailing)),
            np.where(north, np.reshape(nw, (4,) + trailing), np.reshape(sw, (4,) + trailing)),
        )
        return PrimitiveState.from_stack(stacked)

    return CaseSpec(
        name=key.lower(),
        dimension=2,
        lower=(0.0, 0.0),
        upper=(1.0, 1.0),
        default_cells=(200, 200),
        final_time=0.4,
        initial=initial,
        boundaries=BoundaryConditions.uniform(BoundaryKind.OUTFLOW, 2),
        alpha=1200.0,
        sigma="lnrho",
        cfl=0.4,
        output_times=(0.0, 0.4),
        description=f"2D Riemann problem {key}: {_RIEMANN_TITLES[key]}",
    )


# ============================================================================
# 3D problems
# ============================================================================


def case_sine3d() -> CaseSpec:
    """Density sine wave advected diagonally through the periodic unit cube."""
    velocity = (0.2, 0.4, 0.6)
    speed_sum = sum(velocity)

    def exact(x: np.ndarray, t: float) -> PrimitiveState:
        rho = 1.0 + 0.2 * np.sin(2.0 * math.pi * (x[0] + x[1] + x[2] - speed_sum * t))
        base = _uniform_state(rho.shape, 1.0, velocity, 1.0)
        return PrimitiveState(rho=rho, v=base.v, p=base.p)

    return CaseSpec(
        name="sine3d",
        dimension=3,
        lower=(0.0, 0.0, 0.0),
        upper=(1.0, 1.0, 1.0),
        default_cells=(20, 20, 20),
        final_time=0.1,
        initial=lambda x: exact(x, 0.0),
        boundaries=BoundaryConditions.uniform(BoundaryKind.PERIODIC, 3),
        alpha=20.0,
        sigma="rho",
        mu=3,
        cfl=0.3,
        exact=exact,
        output_times=(0.0, 0.1),
        description="3D sine wave, periodic, exact solution",
    )


def case_spherical_riemann() -> CaseSpec:
    """Spherical blast in the positive octant with symmetry on the coordinate planes."""
    inside = (10.0, (0.0, 0.0, 0.0), 40.0 / 3.0)
    outside = (1.0, (0.0, 0.0, 0.0), 1e-6)

    def initial(x: np.ndarray) -> PrimitiveState:
        r = np.sqrt(np.sum(x * x, axis=0))
        return _select(r < 0.5, _uniform_state(r.shape, *inside), _uniform_state(r.shape, *outside))

    kinds = tuple((BoundaryKind.SYMMETRY, BoundaryKind.OUTFLOW) for _ in range(3))
    return CaseSpec(
        name="spherical-riemann",
        dimension=3,
        lower=(0.0, 0.0, 0.0),
        upper=(1.0, 1.0, 1.0),
        default_cells=(50, 50, 50),
        final_time=0.4,
        initial=initial,
        boundaries=BoundaryConditions(kinds=kinds),
        alpha=1000.0,
        sigma="lnrho",
        cfl=0.3,
        output_times=(0.0, 0.4),
        description="3D spherical Riemann problem in one octant",
    )


SHOCK_BUBBLE_PRE = (1.0, (0.0, 0.0, 0.0), 0.05)
SHOCK_BUBBLE_POST = (1.865225080631180, (-0.196781107378299, 0.0, 0.0), 0.15)
SHOCK_BUBBLE_BUBBLE = (0.1358, (0.0, 0.0, 0.0), 0.05)
SHOCK_POSITION = 265.0
BUBBLE_CENTER = (215.0, 0.0, 0.0)
BUBBLE_RADIUS = 25.0


def case_shock_bubble(full: bool = False) -> CaseSpec:
    """Planar shock moving in -x1 into a light spherical bubble.

    Args:
        full: Use the 325x90x90 grid instead of the 65x18x18 desk grid
    """

    def initial(x: np.ndarray) -> PrimitiveState:
        shape = x.shape[1:]
        state = _select(
            x[0] < SHOCK_POSITION,
            _uniform_state(shape, *SHOCK_BUBBLE_PRE),
            _uniform_state(shape, *SHOCK_BUBBLE_POST),
        )
        offset = x - np.reshape(BUBBLE_CENTER, (3,) + (1,) * len(shape))
        bubble = np.sqrt(np.sum(offset * offset, axis=0)) <= BUBBLE_RADIUS
        return _select(bubble, _uniform_state(shape, *SHOCK_BUBBLE_BUBBLE), state)

    rho, v, p = SHOCK_BUBBLE_POST
    post = PrimitiveState(rho=np.asarray(rho), v=np.asarray(v), p=np.asarray(p))
    kinds = (
        (BoundaryKind.OUTFLOW, BoundaryKind.INFLOW),
        (BoundaryKind.OUTFLOW, BoundaryKind.OUTFLOW),
        (BoundaryKind.OUTFLOW, BoundaryKind.OUTFLOW),
    )
    return CaseSpec(
        name="shock-bubble",
        dimension=3,
        lower=(0.0, -45.0, -45.0),
        upper=(325.0, 45.0, 45.0),
        default_cells=(325, 90, 90) if full else (65, 18, 18),
        final_time=450.0,
        initial=initial,
        boundaries=BoundaryConditions(kinds=kinds, inflow=post),
        alpha=1000.0,
        sigma="lnrho",
        cfl=0.3,
        output_times=(0.0, 90.0, 180.0, 270.0, 360.0, 450.0),
        description="3D shock-bubble interaction (desk grid unless full=True)",
    )


# ============================================================================
# Registry
# ============================================================================

CASES: Dict[str, Callable[[], CaseSpec]] = {
    "vortex": case_vortex_2d,
    "rp1": lambda: case_riemann2d("RP1"),
    "rp2": lambda: case_riemann2d("RP2"),
    "rp3": lambda: case_riemann2d("RP3"),
    "sine3d": case_sine3d,
    "spherical-riemann": case_spherical_riemann,
    "shock-bubble": case_shock_bubble,
    "shock-bubble-full": lambda: case_shock_bubble(full=True),
}


def available_cases() -> Tuple[str, ...]:
    return tuple(CASES)


def get_case(name: str) -> CaseSpec:
    """Resolve a registry name to its :class:`CaseSpec`.

    Raises:
        CaseNotFoundError: If the name is not registered
    """
    try:
        factory = CASES[name.lower()]
    except KeyError:
        raise CaseNotFoundError(name, available_cases()) from None
    return factory()
