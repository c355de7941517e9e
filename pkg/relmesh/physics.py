"""Ideal-gas special relativistic thermodynamics and characteristic algebra.

States are stored component-first: a velocity or momentum array has shape
``(d, ...)`` and every scalar field shares the trailing shape ``...``. All
functions broadcast over that trailing shape, so a single state is simply
the case of an empty trailing shape.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .exceptions import (
    DegeneracyError,
    DomainError,
    NonConvergenceError,
    UnphysicalStateError,
    ValidationError,
)

logger = logging.getLogger(__name__)

NEWTON_STEPS = 50
BISECTION_STEPS = 200
PRESSURE_TOL = 1e-13
DEGENERACY_FLOOR = 1e-14

Index = Union[int, slice, Tuple[Union[int, slice], ...]]


def _first_index(mask: np.ndarray) -> Optional[Tuple[int, ...]]:
    """Return the index of the first True entry of ``mask``."""
    if mask.ndim == 0:
        return None
    return tuple(int(i) for i in np.argwhere(mask)[0])


def _as_tuple(index: Index) -> tuple:
    return index if isinstance(index, tuple) else (index,)


@dataclass(frozen=True)
class GasModel:
    """Ideal-gas equation of state.

    Attributes:
        gamma: Adiabatic index, 1 < gamma <= 2
    """

    gamma: float = 5.0 / 3.0

    def __post_init__(self) -> None:
        if not 1.0 < self.gamma <= 2.0:
            raise ValidationError(f"Adiabatic index must lie in (1, 2], got {self.gamma}")

    @property
    def kappa(self) -> float:
        """Gamma / (Gamma - 1), the enthalpy coefficient of the pressure."""
        return self.gamma / (self.gamma - 1.0)


@dataclass(frozen=True)
class PrimitiveState:
    """Primitive variables (rho, v, p) over an arbitrary trailing shape.

    Attributes:
        rho: Rest-mass density
        v: Velocity, shape (d, ...)
        p: Pressure
    """

    rho: np.ndarray
    v: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @property
    def dim(self) -> int:
        return int(self.v.shape[0])

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.rho.shape)

    @classmethod
    def from_stack(cls, arr: np.ndarray) -> "PrimitiveState":
        """Build from a stacked array ``(rho, v_1..v_d, p)`` along axis 0."""
        arr = np.asarray(arr, dtype=float)
        return cls(rho=arr[0], v=arr[1:-1], p=arr[-1])

    def stack(self) -> np.ndarray:
        """Stack into a single ``(d+2, ...)`` array."""
        return np.concatenate([self.rho[None], self.v, self.p[None]])

    def __getitem__(self, index: Index) -> "PrimitiveState":
        idx = _as_tuple(index)
        return PrimitiveState(self.rho[idx], self.v[(slice(None),) + idx], self.p[idx])

    def validate(self) -> None:
        """Check rho > 0, p > 0 and |v| < 1.

        Raises:
            UnphysicalStateError: If any entry violates the invariants
        """
        v2 = np.sum(self.v * self.v, axis=0)
        for mask, reason in (
            (~(self.rho > 0), "non-positive density"),
            (~(self.p > 0), "non-positive pressure"),
            (~(v2 < 1), "superluminal velocity"),
        ):
            if np.any(mask):
                raise UnphysicalStateError(reason, cell=_first_index(mask))


@dataclass(frozen=True)
class ConservedState:
    """Conserved variables (D, m, E) over an arbitrary trailing shape.

    Attributes:
        D: Mass density
        m: Momentum density, shape (d, ...)
        E: Energy density
    """

    D: np.ndarray
    m: np.ndarray
    E: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "D", np.asarray(self.D, dtype=float))
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float))
        object.__setattr__(self, "E", np.asarray(self.E, dtype=float))

    @property
    def dim(self) -> int:
        return int(self.m.shape[0])

    @classmethod
    def from_stack(cls, arr: np.ndarray) -> "ConservedState":
        arr = np.asarray(arr, dtype=float)
        return cls(D=arr[0], m=arr[1:-1], E=arr[-1])

    def stack(self) -> np.ndarray:
        return np.concatenate([self.D[None], self.m, self.E[None]])

    def __getitem__(self, index: Index) -> "ConservedState":
        idx = _as_tuple(index)
        return ConservedState(self.D[idx], self.m[(slice(None),) + idx], self.E[idx])


@dataclass(frozen=True)
class EntropyBundle:
    """Entropy pair, entropy variables and potentials of a state.

    Attributes:
        eta: Entropy function -rho W s / (Gamma - 1)
        q: Entropy flux, shape (d, ...)
        V: Entropy variables, shape (d+2, ...)
        phi: Entropy potential V^T U - eta
        psi: Potential flux V^T F_k - q_k, shape (d, ...)
    """

    eta: np.ndarray
    q: np.ndarray
    V: np.ndarray
    phi: np.ndarray
    psi: np.ndarray


def lorentz_factor(v: np.ndarray) -> np.ndarray:
    """Return W = 1/sqrt(1 - |v|^2) for velocities of shape (d, ...).

    Raises:
        DomainError: If |v| >= 1 anywhere
    """
    v2 = np.sum(np.asarray(v) ** 2, axis=0)
    if np.any(~(v2 < 1.0)):
        raise DomainError(f"Velocity magnitude must be below 1 (max |v|^2 = {np.max(v2):.6g})")
    return 1.0 / np.sqrt(1.0 - v2)


def prim_to_cons(prim: PrimitiveState, gas: GasModel) -> ConservedState:
    """Convert primitive to conserved variables.

    Args:
        prim: Primitive state
        gas: Equation of state

    Returns:
        Conserved state with D = rho W, m = rho h W^2 v, E = rho h W^2 - p

    Raises:
        DomainError: If |v| >= 1
    """
    W = lorentz_factor(prim.v)
    enthalpy_density = (prim.rho + gas.kappa * prim.p) * W * W
    return ConservedState(
        D=prim.rho * W, m=enthalpy_density * prim.v, E=enthalpy_density - prim.p
    )


def _pressure_residual(
    p: np.ndarray, D: np.ndarray, m2: np.ndarray, E: np.ndarray, kappa: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Residual of E + p = D W + kappa p W^2 written in terms of p, and its derivative."""
    u = E + p
    s2 = 1.0 - m2 / (u * u)
    s = np.sqrt(np.maximum(s2, 0.0))
    f = u * s2 - D * s - kappa * p
    with np.errstate(divide="ignore", invalid="ignore"):
        df = 1.0 + m2 / (u * u) - D * m2 / (u**3 * s) - kappa
    return f, df


def cons_to_prim(
    cons: ConservedState,
    gas: GasModel,
    *,
    tol: float = PRESSURE_TOL,
    max_newton: int = NEWTON_STEPS,
) -> PrimitiveState:
    """Recover primitive variables by a safeguarded Newton iteration on p.

    The root is bracketed in [max(0, |m| - E), E]; Newton iterates falling
    outside the current bracket are replaced by bisection, and states still
    unconverged after ``max_newton`` steps finish by pure bisection.

    Args:
        cons: Conserved state
        gas: Equation of state
        tol: Relative tolerance on the pressure
        max_newton: Newton steps before the bisection fallback

    Returns:
        Primitive state

    Raises:
        UnphysicalStateError: If D <= 0 or E <= sqrt(D^2 + |m|^2)
        NonConvergenceError: If the bisection fallback also fails
    """
    D, E = cons.D, cons.E
    m2 = np.sum(cons.m * cons.m, axis=0)
    q = E - np.sqrt(D * D + m2)
    for mask, reason in (
        (~np.isfinite(D) | ~np.isfinite(E) | ~np.isfinite(m2), "non-finite conserved state"),
        (~(D > 0), "non-positive mass density"),
        (~(q > 0), "energy below rest mass and momentum bound"),
    ):
        if np.any(mask):
            raise UnphysicalStateError(reason, cell=_first_index(mask))

    kappa = gas.kappa
    floor = 64.0 * np.finfo(float).eps * E
    lo = np.maximum(np.sqrt(m2) - E, 0.0)
    hi = E.copy()
    p = np.clip((gas.gamma - 1.0) * q, lo, hi)
    done = np.zeros(p.shape, dtype=bool)

    for _ in range(max_newton):
        f, df = _pressure_residual(p, D, m2, E, kappa)
        lo = np.where(f > 0, p, lo)
        hi = np.where(f < 0, p, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = p - f / df
        outside = ~((trial >= lo) & (trial <= hi))
        trial = np.where(outside, 0.5 * (lo + hi), trial)
        converged = (np.abs(trial - p) <= tol * trial + floor) | (f == 0)
        p = np.where(done, p, trial)
        done |= converged
        if np.all(done):
            break

    if not np.all(done):
        logger.debug("Pressure recovery: %d state(s) fall back to bisection", int(np.sum(~done)))
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            f, _ = _pressure_residual(mid, D, m2, E, kappa)
            lo = np.where(~done & (f > 0), mid, lo)
            hi = np.where(~done & (f <= 0), mid, hi)
            p = np.where(done, p, 0.5 * (lo + hi))
            done |= hi - lo <= tol * hi + floor
            if np.all(done):
                break
        if not np.all(done):
            raise NonConvergenceError(max_newton + BISECTION_STEPS, int(np.sum(~done)))

    u = E + p
    v = cons.m / u
    W = 1.0 / np.sqrt(1.0 - m2 / (u * u))
    return PrimitiveState(rho=D / W, v=v, p=p)


def sound_speed(prim: PrimitiveState, gas: GasModel) -> np.ndarray:
    """Return the relativistic sound speed c_s = sqrt(Gamma p / (rho h))."""
    return np.sqrt(gas.gamma * prim.p / (prim.rho + gas.kappa * prim.p))


def physical_flux(prim: PrimitiveState, gas: GasModel, axis: int) -> np.ndarray:
    """Return the physical flux F_axis stacked as (d+2, ...)."""
    cons = prim_to_cons(prim, gas)
    vk = prim.v[axis]
    momentum = cons.m * vk
    momentum[axis] += prim.p
    return np.concatenate([(cons.D * vk)[None], momentum, cons.m[axis][None]])


def entropy_variables(prim: PrimitiveState, gas: GasModel) -> np.ndarray:
    """Return V = d(eta)/dU stacked as (d+2, ...)."""
    W = lorentz_factor(prim.v)
    beta = prim.rho / prim.p
    s = np.log(prim.p) - gas.gamma * np.log(prim.rho)
    first = (gas.gamma - s) / (gas.gamma - 1.0) + beta
    return np.concatenate([first[None], beta * W * prim.v, (-beta * W)[None]])


def entropy_bundle(prim: PrimitiveState, gas: GasModel) -> EntropyBundle:
    """Evaluate the entropy pair, entropy variables and potentials.

    Args:
        prim: Primitive state
        gas: Equation of state

    Returns:
        EntropyBundle with eta, q_k = eta v_k, V, phi = rho W, psi_k = rho W v_k
    """
    W = lorentz_factor(prim.v)
    s = np.log(prim.p) - gas.gamma * np.log(prim.rho)
    eta = -prim.rho * W * s / (gas.gamma - 1.0)
    phi = prim.rho * W
    return EntropyBundle(
        eta=eta,
        q=eta * prim.v,
        V=entropy_variables(prim, gas),
        phi=phi,
        psi=phi * prim.v,
    )


def entropy_to_prim(V: np.ndarray, gas: GasModel) -> PrimitiveState:
    """Invert the entropy-variable map V -> (rho, v, p).

    Raises:
        DomainError: If V is not the image of an admissible state
    """
    V = np.asarray(V, dtype=float)
    last = V[-1]
    if np.any(~(last < 0)):
        raise DomainError("Last entropy variable must be negative")
    v = -V[1:-1] / last
    W = lorentz_factor(v)
    beta = -last / W
    log_rho = V[0] - gas.kappa - np.log(beta) / (gas.gamma - 1.0) - beta
    rho = np.exp(log_rho)
    return PrimitiveState(rho=rho, v=v, p=rho / beta)


def eigenvalues(prim: PrimitiveState, gas: GasModel) -> np.ndarray:
    """Eigenvalues of the x1-direction flux Jacobian, ascending, shape (d+2, ...).

    Raises:
        DomainError: If the acoustic radicand is negative
    """
    c2 = sound_speed(prim, gas) ** 2
    v1 = prim.v[0]
    vsq = np.sum(prim.v * prim.v, axis=0)
    radicand = 1.0 - v1 * v1 - (vsq - v1 * v1) * c2
    if np.any(radicand < 0):
        raise DomainError("Negative radicand in acoustic eigenvalues")
    root = np.sqrt(c2 * (1.0 - vsq) * radicand)
    denom = 1.0 - vsq * c2
    lam_minus = (v1 * (1.0 - c2) - root) / denom
    lam_plus = (v1 * (1.0 - c2) + root) / denom
    middle = np.broadcast_to(v1, (prim.dim,) + v1.shape)
    return np.concatenate([lam_minus[None], middle, lam_plus[None]])


def scaled_eigenvectors(prim: PrimitiveState, gas: GasModel) -> np.ndarray:
    """Scaled right eigenvectors R with R R^T = dU/dV, shape (d+2, d+2, ...).

    Columns are ordered (lambda_-, contact, shear..., lambda_+) to match
    :func:`eigenvalues`. The 2D matrix is the 3D one with the third
    velocity row and column removed.

    Raises:
        DegeneracyError: If 1 - v1^2 - v2^2 <= 0
    """
    d = prim.dim
    g = gas.gamma
    rho, p, v = prim.rho, prim.p, prim.v
    v1 = v[0]
    W = lorentz_factor(v)
    h = 1.0 + gas.kappa * p / rho
    c2 = g * p / (rho * h)
    c = np.sqrt(c2)
    vsq = np.sum(v * v, axis=0)

    perp = 1.0 - v1 * v1 - v[1] * v[1]
    if np.any(perp <= 0):
        raise DegeneracyError(float(np.min(perp)))
    perp = np.maximum(perp, DEGENERACY_FLOOR)
    axial = 1.0 - v1 * v1

    radicand = np.maximum(axial - (vsq - v1 * v1) * c2, 0.0)
    lam = eigenvalues(prim, gas)
    lam_minus, lam_plus = lam[0], lam[-1]
    a_minus = axial / (1.0 - v1 * lam_minus)
    a_plus = axial / (1.0 - v1 * lam_plus)
    b = rho * W * radicand / (g * axial)
    cc = rho * v1 * c * np.sqrt(radicand) / (g * axial)
    s_minus = np.sqrt(np.maximum(b - cc, 0.0) / 2.0)
    s_plus = np.sqrt((b + cc) / 2.0)
    s_contact = np.sqrt((g - 1.0) * rho * W**3 / g)

    n = d + 2
    R = np.zeros((n, n) + rho.shape)
    hW = h * W
    hW2 = h * W * W

    for col, amp, a, lmb in ((0, s_minus, a_minus, lam_minus), (n - 1, s_plus, a_plus, lam_plus)):
        R[0, col] = amp
        R[1, col] = hW * a * lmb * amp
        for j in range(1, d):
            R[1 + j, col] = hW * v[j] * amp
        R[n - 1, col] = hW * a * amp

    R[0, 1] = s_contact / W
    for j in range(d):
        R[1 + j, 1] = v[j] * s_contact
    R[n - 1, 1] = s_contact

    def shear(t: int) -> np.ndarray:
        col = np.empty((n,) + rho.shape)
        col[0] = W * v[t]
        for j in range(d):
            col[1 + j] = 2.0 * hW2 * v[j] * v[t]
        col[1 + t] += h
        col[n - 1] = 2.0 * hW2 * v[t]
        return col

    s22 = np.sqrt(p * W * perp / (h * axial))
    if d == 2:
        R[:, 2] = shear(1) * s22
    else:
        v2, v3 = v[1], v[2]
        s32 = -v2 * v3 * np.sqrt(p * W / (h * axial * perp))
        s33 = np.sqrt(p / (hW * perp))
        col2, col3 = shear(1), shear(2)
        R[:, 2] = col2 * s22 + col3 * s32
        R[:, 3] = col3 * s33
    return R


def velocity_rotation(n: np.ndarray) -> np.ndarray:
    """Orthogonal velocity block of the rotation matrix, shape (d, d, ...).

    The first row is the unit normal n/|n|. Angles follow the two-argument
    arctangent; a normal along x3 uses theta = 0, and a zero normal gives
    the identity.
    """
    n = np.asarray(n, dtype=float)
    d = n.shape[0]
    if d == 2:
        r = np.hypot(n[0], n[1])
        safe = np.where(r > 0, r, 1.0)
        ct = np.where(r > 0, n[0] / safe, 1.0)
        st = np.where(r > 0, n[1] / safe, 0.0)
        return np.array([[ct, st], [-st, ct]])
    if d != 3:
        raise ValidationError(f"Metric vectors must have 2 or 3 components, got {d}")
    r12 = np.hypot(n[0], n[1])
    safe12 = np.where(r12 > 0, r12, 1.0)
    ct = np.where(r12 > 0, n[0] / safe12, 1.0)
    st = np.where(r12 > 0, n[1] / safe12, 0.0)
    length = np.sqrt(r12 * r12 + n[2] * n[2])
    safe = np.where(length > 0, length, 1.0)
    cp = np.where(length > 0, r12 / safe, 1.0)
    sp = np.where(length > 0, n[2] / safe, 0.0)
    zero = np.zeros_like(ct)
    return np.array(
        [
            [cp * ct, cp * st, sp],
            [-st, ct, zero],
            [-sp * ct, -sp * st, cp],
        ]
    )


def rotation_matrix(n: np.ndarray) -> np.ndarray:
    """Rotation T acting on conserved vectors, shape (d+2, d+2, ...).

    T fixes D and E and rotates the momentum so that its first component
    lies along the metric vector n.
    """
    Q = velocity_rotation(n)
    d = Q.shape[0]
    T = np.zeros((d + 2, d + 2) + Q.shape[2:])
    T[0, 0] = 1.0
    T[d + 1, d + 1] = 1.0
    T[1 : d + 1, 1 : d + 1] = Q
    return T


def rotate_velocity(prim: PrimitiveState, Q: np.ndarray) -> PrimitiveState:
    """Apply a velocity rotation block to a primitive state."""
    return PrimitiveState(prim.rho, np.einsum("ij...,j...->i...", Q, prim.v), prim.p)
