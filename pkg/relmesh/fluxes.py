"""Two-point entropy conservative and entropy stable interface fluxes.

Every function works on whole arrays of interfaces at once: the states in
a :class:`FluxContext` carry a trailing shape shared with the metric
arrays, and the returned fluxes are stacked as ``(d+2, ...)``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import DomainError, ValidationError
from .physics import (
    GasModel,
    PrimitiveState,
    eigenvalues,
    entropy_bundle,
    entropy_variables,
    lorentz_factor,
    prim_to_cons,
    rotate_velocity,
    rotation_matrix,
    scaled_eigenvectors,
    velocity_rotation,
)

LOG_MEAN_SERIES = 1e-4
# Largest mismatch between the linearised and the true conserved jump,
# relative to E_L + E_R, for which R R^T [[V]] is used
LINEARIZATION_TOL = 0.1


@dataclass(frozen=True)
class InterfaceMetrics:
    """Metric data at a set of interfaces in one direction k.

    Attributes:
        n: Spatial metrics J dxi_k/dx_l, shape (d, ...)
        nt: Temporal metric J dxi_k/dt, shape (...)
    """

    n: np.ndarray
    nt: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", np.asarray(self.n, dtype=float))
        object.__setattr__(self, "nt", np.asarray(self.nt, dtype=float))

    @property
    def L(self) -> np.ndarray:
        """Magnitude of the spatial metric vector."""
        return np.sqrt(np.sum(self.n * self.n, axis=0))


@dataclass(frozen=True)
class FluxContext:
    """Left/right states and metrics for a set of interfaces."""

    left: PrimitiveState
    right: PrimitiveState
    metrics: InterfaceMetrics
    gas: GasModel


def log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Logarithmic mean (b - a) / (ln b - ln a).

    Uses ln(b/a) = 2 artanh(f) with f = (b - a)/(b + a), switching to the
    truncated series of artanh(f)/f when f^2 < 1e-4.

    Raises:
        DomainError: If either argument is not positive
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("Logarithmic mean requires positive arguments")
    f = (b - a) / (b + a)
    u = f * f
    small = u < LOG_MEAN_SERIES
    series = 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.arctanh(f) / np.where(small, 1.0, f)
    return (a + b) / (2.0 * np.where(small, series, exact))


def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return 0 where a and b differ in sign, else the smaller-magnitude argument."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


class _InterfaceMeans:
    """Arithmetic and logarithmic means shared by the EC flux and state."""

    def __init__(self, left: PrimitiveState, right: PrimitiveState, gas: GasModel):
        w_left = lorentz_factor(left.v)
        w_right = lorentz_factor(right.v)
        beta_left = left.rho / left.p
        beta_right = right.rho / right.p

        self.rho_ln = log_mean(left.rho, right.rho)
        beta_ln = log_mean(beta_left, beta_right)
        self.p_hat = (left.rho + right.rho) / (beta_left + beta_right)
        self.W = 0.5 * (w_left + w_right)
        self.Wv = 0.5 * (w_left * left.v + w_right * right.v)
        self.alpha0 = 1.0 + 1.0 / ((gas.gamma - 1.0) * beta_ln)
        self.S = np.sum(self.Wv * self.Wv, axis=0)
        self.denom = self.W * self.W - self.S

    def flux(self, axis: int) -> np.ndarray:
        mass = self.rho_ln * self.Wv[axis]
        energy = self.W * (self.p_hat * self.Wv[axis] + self.alpha0 * mass) / self.denom
        momentum = self.Wv / self.W * energy
        momentum[axis] += self.p_hat
        return np.concatenate([mass[None], momentum, energy[None]])

    def state(self) -> np.ndarray:
        mass = self.rho_ln * self.W
        energy = (
            self.W
            * (self.p_hat * self.S / self.W + self.rho_ln * self.W * self.alpha0)
            / self.denom
        )
        momentum = self.Wv / self.W * (self.p_hat + energy)
        return np.concatenate([mass[None], momentum, energy[None]])


def ec_flux_cartesian(
    left: PrimitiveState, right: PrimitiveState, gas: GasModel, axis: int
) -> np.ndarray:
    """Entropy conservative flux in Cartesian direction ``axis``.

    Satisfies [[V]]^T F = [[psi_axis]] and reduces to F_axis at equal states.
    """
    if not 0 <= axis < left.dim:
        raise ValidationError(f"Axis {axis} out of range for dimension {left.dim}")
    return _InterfaceMeans(left, right, gas).flux(axis)


def ec_state(left: PrimitiveState, right: PrimitiveState, gas: GasModel) -> np.ndarray:
    """Two-point state U~ with [[V]]^T U~ = [[phi]], consistent with U."""
    return _InterfaceMeans(left, right, gas).state()


def ec_flux_curvilinear(ctx: FluxContext) -> np.ndarray:
    """Moving-mesh EC flux nt U~ + sum_l n_l F~_l.

    Args:
        ctx: Interface states and metrics

    Returns:
        Flux stacked as (d+2, ...)
    """
    means = _InterfaceMeans(ctx.left, ctx.right, ctx.gas)
    n, nt = ctx.metrics.n, ctx.metrics.nt
    total = nt * means.state()
    for axis in range(ctx.left.dim):
        total = total + n[axis] * means.flux(axis)
    return total


def ec_entropy_flux(ctx: FluxContext, fhat: np.ndarray) -> np.ndarray:
    """Numerical entropy flux <V>^T F - nt <phi> - sum_l n_l <psi_l>.

    Valid for any two-point flux ``fhat``; with an ES flux it yields the
    matching dissipative entropy flux.
    """
    left = entropy_bundle(ctx.left, ctx.gas)
    right = entropy_bundle(ctx.right, ctx.gas)
    v_mean = 0.5 * (left.V + right.V)
    n, nt = ctx.metrics.n, ctx.metrics.nt
    q = np.sum(v_mean * fhat, axis=0) - nt * 0.5 * (left.phi + right.phi)
    return q - np.sum(n * 0.5 * (left.psi + right.psi), axis=0)


def _mean_primitive(ctx: FluxContext) -> PrimitiveState:
    return PrimitiveState(
        0.5 * (ctx.left.rho + ctx.right.rho),
        0.5 * (ctx.left.v + ctx.right.v),
        0.5 * (ctx.left.p + ctx.right.p),
    )


def _frozen_decomposition(ctx: FluxContext) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Velocity rotation Q, eigenvectors R(TU) and the scalar dissipation speed."""
    Q = velocity_rotation(ctx.metrics.n)
    rotated = rotate_velocity(_mean_primitive(ctx), Q)
    R = scaled_eigenvectors(rotated, ctx.gas)
    lam = eigenvalues(rotated, ctx.gas)
    speed = np.max(np.abs(ctx.metrics.nt + ctx.metrics.L * lam), axis=0)
    return Q, R, speed


def dissipation_speed(ctx: FluxContext) -> np.ndarray:
    """max_j |nt + L lambda_j| at the rotated arithmetic-mean state."""
    return _frozen_decomposition(ctx)[2]


def conserved_jump(ctx: FluxContext) -> np.ndarray:
    return prim_to_cons(ctx.right, ctx.gas).stack() - prim_to_cons(ctx.left, ctx.gas).stack()


def _linearization_holds(ctx: FluxContext, Q: np.ndarray, R: np.ndarray, w_jump: np.ndarray) -> np.ndarray:
    left = prim_to_cons(ctx.left, ctx.gas)
    right = prim_to_cons(ctx.right, ctx.gas)
    linear = _from_scaled(w_jump, Q, R)
    mismatch = np.max(np.abs(linear - (right.stack() - left.stack())), axis=0)
    return mismatch <= LINEARIZATION_TOL * (left.E + right.E)


def linearization_holds(ctx: FluxContext) -> np.ndarray:
    """Interfaces where T^T R R^T T [[V]] reproduces [[U]].

    Across strong pressure ratios the entropy-variable jump is many orders
    larger than the conserved jump and the frozen R R^T no longer maps one
    onto the other. The ES fluxes fall back to speed [[U]] there.
    """
    Q, R, _ = _frozen_decomposition(ctx)
    jump = entropy_variables(ctx.right, ctx.gas) - entropy_variables(ctx.left, ctx.gas)
    return _linearization_holds(ctx, Q, R, _to_scaled(jump, Q, R))


def _rotate(vec: np.ndarray, Q: np.ndarray, transpose: bool = False) -> np.ndarray:
    spec = "ji...,j...->i..." if transpose else "ij...,j...->i..."
    inner = np.einsum(spec, Q, vec[1:-1])
    return np.concatenate([vec[:1], inner, vec[-1:]])


def _to_scaled(vec: np.ndarray, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """w = R^T T vec."""
    return np.einsum("ji...,j...->i...", R, _rotate(vec, Q))


def _from_scaled(w: np.ndarray, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """T^T R w."""
    return _rotate(np.einsum("ij...,j...->i...", R, w), Q, transpose=True)


def dissipation_matrix(ctx: FluxContext) -> np.ndarray:
    """Scalar-speed dissipation D = T^T R (max_j |nt + L lambda_j|) R^T T.

    R and lambda are evaluated at the rotated arithmetic-mean primitive
    state. D is symmetric positive semi-definite.
    """
    Q, R, speed = _frozen_decomposition(ctx)
    T = rotation_matrix(ctx.metrics.n)
    RRt = np.einsum("ik...,jk...->ij...", R, R)
    return speed * np.einsum("ki...,kl...,lj...->ij...", T, RRt, T)


def es_flux_first_order(ctx: FluxContext) -> np.ndarray:
    """EC flux minus (1/2) D [[V]] with the full entropy-variable jump.

    Where the linearisation fails the dissipation is speed [[U]] instead;
    [[V]]^T [[U]] >= 0 by convexity of the entropy, so both are stable.
    """
    Q, R, speed = _frozen_decomposition(ctx)
    jump = entropy_variables(ctx.right, ctx.gas) - entropy_variables(ctx.left, ctx.gas)
    w_jump = _to_scaled(jump, Q, R)
    matrix = _from_scaled(w_jump, Q, R)
    direction = np.where(_linearization_holds(ctx, Q, R, w_jump), matrix, conserved_jump(ctx))
    return ec_flux_curvilinear(ctx) - 0.5 * speed * direction


def scaled_entropy_jumps(
    stencil: Sequence[PrimitiveState],
    ctx: FluxContext,
    variables: Optional[Sequence[np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Plain and minmod-reconstructed jumps of w = R^T T V at the interface.

    Args:
        stencil: States at cells i-1, i, i+1, i+2 for interface i+1/2
        ctx: Context whose left/right are stencil[1] and stencil[2]
        variables: Precomputed entropy variables of the stencil states

    Returns:
        Tuple (plain jump, reconstructed jump, Q, R, speed)
    """
    if len(stencil) != 4:
        raise ValidationError(f"Second-order stencil needs 4 states, got {len(stencil)}")
    if variables is None:
        variables = [entropy_variables(state, ctx.gas) for state in stencil]
    Q, R, speed = _frozen_decomposition(ctx)
    w0, w1, w2, w3 = (_to_scaled(V, Q, R) for V in variables)
    w_minus = w1 + 0.5 * minmod(w1 - w0, w2 - w1)
    w_plus = w2 - 0.5 * minmod(w2 - w1, w3 - w2)
    return w2 - w1, w_plus - w_minus, Q, R, speed


def es_flux_second_order(
    stencil: Sequence[PrimitiveState],
    ctx: FluxContext,
    variables: Optional[Sequence[np.ndarray]] = None,
) -> np.ndarray:
    """Second-order ES flux F~ - (1/2) T^T R speed <<w>>.

    The reconstruction runs in scaled entropy variables with R and T frozen
    at the interface mean state, so the reconstructed jump keeps the sign
    of the plain jump component by component.
    """
    plain, reconstructed, Q, R, speed = scaled_entropy_jumps(stencil, ctx, variables)
    matrix = _from_scaled(reconstructed, Q, R)
    direction = np.where(_linearization_holds(ctx, Q, R, plain), matrix, conserved_jump(ctx))
    return ec_flux_curvilinear(ctx) - 0.5 * speed * direction
