import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from naqtur.qcore import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    ValidationError,
    bloch_state,
    bloch_vector,
    exp_spectral,
    frobenius_norm,
    haar_su2,
    haar_unitary,
    hermitian_eig,
    matrix_log_psd,
    matrix_sqrt_psd,
    partial_trace,
    random_unit_vector,
    su2_adjoint,
    su2_rotation,
    tensor,
    validate_density,
    validate_unitary,
)

unit = st.floats(-1, 1, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def test_eig_of_sigma_y_state():
    w, Q = hermitian_eig((I2 + 0.7 * SIGMA_Y) / 2)
    np.testing.assert_allclose(w, [0.15, 0.85], atol=1e-14)
    np.testing.assert_allclose(Q.conj().T @ Q, I2, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_eig_reconstructs(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    H = A + A.conj().T
    dec = hermitian_eig(H)
    assert np.all(np.diff(dec.eigenvalues) >= 0)
    assert frobenius_norm(dec.reconstruct() - H) <= 1e-12 * max(1, frobenius_norm(H))


def test_non_hermitian_rejected():
    with pytest.raises(ValidationError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValidationError):
        hermitian_eig(np.ones((2, 3)))


def test_log_and_exp_match_scipy():
    rho = bloch_state(0.6, [0, 0.6, 0.8])
    np.testing.assert_allclose(matrix_log_psd(rho), scipy.linalg.logm(rho), atol=1e-12)
    np.testing.assert_allclose(exp_spectral(matrix_log_psd(rho)), rho, atol=1e-12)
    np.testing.assert_allclose(matrix_sqrt_psd(rho) @ matrix_sqrt_psd(rho), rho, atol=1e-12)


def test_log_floor_clamps_pure_state():
    L = matrix_log_psd(np.diag([1.0, 0.0]), floor=1e-12)
    np.testing.assert_allclose(np.diag(L).real, [0.0, math.log(1e-12)])
    with pytest.raises(ValidationError):
        matrix_log_psd(np.diag([1.0, 0.0]), floor=0.0)


@pytest.mark.parametrize(
    "rho",
    [np.diag([0.7, 0.4]), np.diag([1.2, -0.2]), np.array([[0.5, 1], [0, 0.5]])],
    ids=["trace", "negative", "non-hermitian"],
)
def test_invalid_densities(rho):
    with pytest.raises(ValidationError):
        validate_density(rho)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_partial_trace_of_products(seed):
    rng = np.random.default_rng(seed)
    a = bloch_state(rng.uniform(0, 0.99), random_unit_vector(rng))
    b = bloch_state(rng.uniform(0, 0.99), random_unit_vector(rng))
    ab = tensor(a, b)
    np.testing.assert_allclose(partial_trace(ab, 2, 2, keep="A"), a, atol=1e-14)
    np.testing.assert_allclose(partial_trace(ab, 2, 2, keep="B"), b, atol=1e-14)


def test_partial_trace_bell_state_is_maximally_mixed():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    bell = np.outer(psi, psi)
    np.testing.assert_allclose(partial_trace(bell, 2, 2, "A"), I2 / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(bell, 2, 2, "B"), I2 / 2, atol=1e-15)


def test_partial_trace_unequal_dimensions():
    rng = np.random.default_rng(3)
    a, b = np.diag(rng.dirichlet(np.ones(3))), np.diag(rng.dirichlet(np.ones(2)))
    np.testing.assert_allclose(partial_trace(tensor(a, b), 3, 2, "A"), a)
    np.testing.assert_allclose(partial_trace(tensor(a, b), 3, 2, "B"), b)
    with pytest.raises(ValidationError):
        partial_trace(tensor(a, b), 2, 2)
    with pytest.raises(ValidationError):
        partial_trace(tensor(a, b), 3, 2, keep="C")


@pytest.mark.parametrize("d", [2, 3, 4])
def test_haar_unitary_first_moment(d):
    rng = np.random.default_rng(d)
    samples = np.array([abs(haar_unitary(d, rng)[0, 0]) ** 2 for _ in range(10_000)])
    # |U_00|^2 is Beta(1, d-1): mean 1/d, variance (d-1)/(d^2 (d+1))
    se = math.sqrt((d - 1) / (d * d * (d + 1)) / len(samples))
    assert abs(samples.mean() - 1 / d) <= 3 * se


def test_haar_su2_is_special_unitary():
    rng = np.random.default_rng(1)
    for _ in range(100):
        U = validate_unitary(haar_su2(rng))
        assert abs(np.linalg.det(U) - 1) <= 1e-12


def test_bloch_state_round_trip_and_domain():
    n = np.array([1.0, 2.0, 2.0]) / 3
    np.testing.assert_allclose(bloch_vector(bloch_state(0.5, n)), 0.5 * n, atol=1e-15)
    with pytest.raises(ValidationError):
        bloch_state(1.0, [0, 0, 1])
    with pytest.raises(ValidationError):
        bloch_state(0.3, [0, 0, 2])


@settings(max_examples=50, deadline=None)
@given(st.floats(-6, 6), unit, unit, unit)
def test_su2_adjoint_matches_rotation(angle, x, y, z):
    axis = np.array([x, y, z])
    if np.linalg.norm(axis) < 1e-3:
        return
    axis /= np.linalg.norm(axis)
    R = su2_adjoint(su2_rotation(angle, axis))
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1) <= 1e-12
    # Rodrigues rotation as an independent oracle
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    rod = np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K
    np.testing.assert_allclose(R, rod, atol=1e-12)


def test_su2_rotation_about_z_rotates_x_into_y():
    U = su2_rotation(math.pi / 2, [0, 0, 1])
    np.testing.assert_allclose(U @ SIGMA_X @ U.conj().T, SIGMA_Y, atol=1e-15)
    np.testing.assert_allclose(U @ SIGMA_Z @ U.conj().T, SIGMA_Z, atol=1e-15)
