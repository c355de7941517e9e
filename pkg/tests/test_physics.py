"""Tests for the equation of state, variable maps and eigenstructure."""

import numpy as np
import pytest

from relmesh.exceptions import DomainError, UnphysicalStateError, ValidationError
from relmesh.physics import (
    ConservedState,
    GasModel,
    PrimitiveState,
    cons_to_prim,
    eigenvalues,
    entropy_bundle,
    entropy_to_prim,
    entropy_variables,
    lorentz_factor,
    physical_flux,
    prim_to_cons,
    rotation_matrix,
    scaled_eigenvectors,
    sound_speed,
)

GAS = GasModel(5.0 / 3.0)


def _random_states(rng, count: int, dim: int, vmax: float, p_range=(0.1, 10.0)) -> PrimitiveState:
    rho = rng.uniform(0.1, 10.0, count)
    p = np.exp(rng.uniform(np.log(p_range[0]), np.log(p_range[1]), count))
    direction = rng.normal(size=(dim, count))
    direction /= np.linalg.norm(direction, axis=0)
    speed = vmax * rng.uniform(0.0, 1.0, count) ** 0.5
    return PrimitiveState(rho, direction * speed, p)


def _state(rho: float, v, p: float) -> PrimitiveState:
    return PrimitiveState(np.array(rho), np.array(v, dtype=float), np.array(p))


def test_gas_model_rejects_bad_gamma():
    """Test the adiabatic index must lie in (1, 2]."""
    with pytest.raises(ValidationError):
        GasModel(1.0)
    with pytest.raises(ValidationError):
        GasModel(2.5)
    assert GasModel(2.0).kappa == pytest.approx(2.0)
    assert GAS.kappa == pytest.approx(2.5)


def test_prim_to_cons_at_rest():
    """Test conserved variables of a fluid at rest."""
    cons = prim_to_cons(_state(1.0, [0.0, 0.0], 1.0), GAS)
    assert cons.D == pytest.approx(1.0)
    np.testing.assert_allclose(cons.m, [0.0, 0.0])
    assert cons.E == pytest.approx(2.5)

    cons = prim_to_cons(_state(10.0, [0.0, 0.0], 40.0 / 3.0), GAS)
    assert cons.D == pytest.approx(10.0)
    assert cons.E == pytest.approx(40.0)


def test_prim_to_cons_moving():
    """Test the Lorentz factor enters D, m and E."""
    prim = _state(1.0, [0.6, 0.0], 1.0)
    cons = prim_to_cons(prim, GAS)
    W = 1.25
    assert cons.D == pytest.approx(W)
    assert cons.m[0] == pytest.approx(3.5 * W * W * 0.6)
    assert cons.E == pytest.approx(3.5 * W * W - 1.0)


def test_lorentz_factor_domain():
    """Test |v| >= 1 is rejected."""
    assert lorentz_factor(np.array([0.0, 0.0])) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lorentz_factor(np.array([0.8, 0.6]))
    with pytest.raises(DomainError):
        prim_to_cons(_state(1.0, [1.0, 0.0, 0.0], 1.0), GAS)


def test_cons_to_prim_at_rest():
    """Test recovery of the rest state (1, 0, 1)."""
    cons = ConservedState(np.array(1.0), np.array([0.0, 0.0]), np.array(2.5))
    prim = cons_to_prim(cons, GAS)
    assert prim.rho == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(prim.v, [0.0, 0.0], atol=1e-14)
    assert prim.p == pytest.approx(1.0, rel=1e-12)


def test_cons_to_prim_roundtrip_2d():
    """Test prim -> cons -> prim recovers random 2D states."""
    rng = np.random.default_rng(7)
    prim = _random_states(rng, 10_000, 2, vmax=0.9)
    back = cons_to_prim(prim_to_cons(prim, GAS), GAS)

    np.testing.assert_allclose(back.rho, prim.rho, rtol=1e-11)
    np.testing.assert_allclose(back.p, prim.p, rtol=1e-11)
    np.testing.assert_allclose(back.v, prim.v, rtol=1e-11, atol=1e-12)


def test_cons_to_prim_roundtrip_3d_wide_range():
    """Test recovery over fast flows and a wide pressure range."""
    rng = np.random.default_rng(11)
    prim = _random_states(rng, 5_000, 3, vmax=0.99, p_range=(1e-6, 1e3))
    cons = prim_to_cons(prim, GAS)
    again = prim_to_cons(cons_to_prim(cons, GAS), GAS)

    scale = cons.E
    assert np.max(np.abs(again.D - cons.D) / scale) < 1e-11
    assert np.max(np.abs(again.E - cons.E) / scale) < 1e-11
    assert np.max(np.abs(again.m - cons.m).max(axis=0) / scale) < 1e-11


def test_cons_to_prim_matches_scalar_bisection():
    """Test the recovered pressure solves E + p = D W + kappa p W^2."""
    D, m1, E = 1.0, 0.3, 2.0
    kappa = GAS.kappa

    def residual(p: float) -> float:
        u = E + p
        W = 1.0 / np.sqrt(1.0 - (m1 / u) ** 2)
        return u - D * W - kappa * p * W * W

    lo, hi = 0.0, E
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0:
            lo = mid
        else:
            hi = mid

    prim = cons_to_prim(ConservedState(np.array(D), np.array([m1, 0.0]), np.array(E)), GAS)
    assert prim.p == pytest.approx(0.5 * (lo + hi), rel=1e-12)
    assert prim.v[1] == 0.0


def test_cons_to_prim_rejects_inadmissible():
    """Test D <= 0 and E below the momentum bound report the cell."""
    D = np.array([1.0, -1.0, 1.0])
    m = np.zeros((2, 3))
    E = np.array([2.0, 2.0, 2.0])
    with pytest.raises(UnphysicalStateError) as info:
        cons_to_prim(ConservedState(D, m, E), GAS)
    assert info.value.cell == (1,)

    with pytest.raises(UnphysicalStateError):
        cons_to_prim(ConservedState(np.array(1.0), np.array([2.0, 0.0]), np.array(2.0)), GAS)


def test_primitive_validate_reports_cell():
    """Test validate flags the first bad entry."""
    prim = PrimitiveState(np.ones((2, 2)), np.zeros((2, 2, 2)), np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(UnphysicalStateError) as info:
        prim.validate()
    assert info.value.cell == (1, 0)
    assert "pressure" in str(info.value)


def test_entropy_potentials_match_definitions():
    """Test phi = V.U - eta and psi_k = V.F_k - q_k."""
    rng = np.random.default_rng(3)
    for dim in (2, 3):
        prim = _random_states(rng, 500, dim, vmax=0.95)
        bundle = entropy_bundle(prim, GAS)
        U = prim_to_cons(prim, GAS).stack()

        terms = bundle.V * U
        scale = np.sum(np.abs(terms), axis=0) + np.abs(bundle.eta)
        assert np.all(np.abs(bundle.phi - (terms.sum(axis=0) - bundle.eta)) <= 1e-12 * scale)

        for k in range(dim):
            F = physical_flux(prim, GAS, k)
            terms = bundle.V * F
            scale = np.sum(np.abs(terms), axis=0) + np.abs(bundle.q[k])
            assert np.all(np.abs(bundle.psi[k] - (terms.sum(axis=0) - bundle.q[k])) <= 1e-12 * scale)


def test_entropy_variables_invert():
    """Test V -> prim inverts prim -> V."""
    rng = np.random.default_rng(5)
    prim = _random_states(rng, 1_000, 3, vmax=0.9)
    back = entropy_to_prim(entropy_variables(prim, GAS), GAS)
    np.testing.assert_allclose(back.rho, prim.rho, rtol=1e-10)
    np.testing.assert_allclose(back.p, prim.p, rtol=1e-10)
    np.testing.assert_allclose(back.v, prim.v, rtol=1e-10, atol=1e-12)


def test_sound_speed_and_rest_eigenvalues():
    """Test eigenvalues of a state at rest are (-c, 0, ..., 0, c)."""
    prim = _state(1.0, [0.0, 0.0], 1.0)
    c = sound_speed(prim, GAS)
    assert c == pytest.approx(np.sqrt((5.0 / 3.0) / 3.5))
    np.testing.assert_allclose(eigenvalues(prim, GAS), [-c, 0.0, 0.0, c], atol=1e-15)


def test_eigenvalues_are_sorted_and_subluminal():
    """Test eigenvalues ascend and stay inside (-1, 1)."""
    rng = np.random.default_rng(9)
    prim = _random_states(rng, 2_000, 3, vmax=0.99)
    lam = eigenvalues(prim, GAS)
    assert np.all(np.diff(lam, axis=0) >= -1e-14)
    assert np.all(np.abs(lam) < 1.0)


def _dU_dV(prim: PrimitiveState, step: float = 1e-6) -> np.ndarray:
    V = entropy_variables(prim, GAS)
    n = V.shape[0]
    out = np.empty((n, n))
    for j in range(n):
        h = step * max(1.0, abs(V[j]))
        plus, minus = V.copy(), V.copy()
        plus[j] += h
        minus[j] -= h
        out[:, j] = (
            prim_to_cons(entropy_to_prim(plus, GAS), GAS).stack()
            - prim_to_cons(entropy_to_prim(minus, GAS), GAS).stack()
        ) / (2 * h)
    return out


def _dF_dU(prim: PrimitiveState, step: float = 1e-5) -> np.ndarray:
    U = prim_to_cons(prim, GAS).stack()
    n = U.shape[0]
    out = np.empty((n, n))
    for j in range(n):
        h = step * max(1.0, abs(U[j]))
        plus, minus = U.copy(), U.copy()
        plus[j] += h
        minus[j] -= h
        f_plus = physical_flux(cons_to_prim(ConservedState.from_stack(plus), GAS), GAS, 0)
        f_minus = physical_flux(cons_to_prim(ConservedState.from_stack(minus), GAS), GAS, 0)
        out[:, j] = (f_plus - f_minus) / (2 * h)
    return out


@pytest.mark.parametrize(
    "v",
    [
        [0.0, 0.0],
        [0.3, 0.2],
        [-0.5, 0.4],
        [0.3, -0.2, 0.1],
        [-0.1, 0.5, 0.6],
    ],
)
def test_scaled_eigenvectors_symmetrize(v):
    """Test R R^T matches dU/dV by finite differences."""
    prim = _state(1.2, v, 0.8)
    R = scaled_eigenvectors(prim, GAS)
    expected = _dU_dV(prim)
    assert np.linalg.norm(R @ R.T - expected) <= 1e-6 * np.linalg.norm(expected)


@pytest.mark.parametrize("v", [[0.3, 0.2], [0.3, -0.2, 0.1]])
def test_scaled_eigenvectors_diagonalize_flux_jacobian(v):
    """Test R diag(lambda) R^-1 matches dF1/dU by finite differences."""
    prim = _state(1.2, v, 0.8)
    R = scaled_eigenvectors(prim, GAS)
    lam = eigenvalues(prim, GAS)
    A = R @ np.diag(lam) @ np.linalg.inv(R)
    expected = _dF_dU(prim)
    assert np.linalg.norm(A - expected) <= 1e-6 * np.linalg.norm(expected)


def test_rotation_matrix_is_orthogonal():
    """Test T is orthogonal with its first momentum row along n."""
    rng = np.random.default_rng(1)
    for dim in (2, 3):
        for _ in range(20):
            n = rng.normal(size=dim)
            T = rotation_matrix(n)
            np.testing.assert_allclose(T @ T.T, np.eye(dim + 2), atol=1e-14)
            np.testing.assert_allclose(T[1, 1 : dim + 1], n / np.linalg.norm(n), atol=1e-14)
            assert T[0, 0] == 1.0 and T[-1, -1] == 1.0


def test_rotation_matrix_degenerate_normals():
    """Test a zero normal gives the identity and a normal along x3 stays orthogonal."""
    np.testing.assert_allclose(rotation_matrix(np.zeros(2)), np.eye(4))
    T = rotation_matrix(np.array([0.0, 0.0, 2.0]))
    np.testing.assert_allclose(T @ T.T, np.eye(5), atol=1e-15)
    np.testing.assert_allclose(T[1, 1:4], [0.0, 0.0, 1.0], atol=1e-15)
