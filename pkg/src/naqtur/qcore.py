"""Dense Hermitian linear algebra and random state/unitary generation.

Operators are plain complex ``numpy`` arrays.  Functions that require a
Hermitian matrix or a density matrix validate their input and raise
:class:`ValidationError` when the invariant is broken beyond tolerance.
"""

from __future__ import annotations

from typing import Literal, NamedTuple

import numpy as np

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
EIG_ATOL = 1e-10
UNITARY_ATOL = 1e-10

# Default eigenvalue floor for matrix logarithms.  Clamping without
# renormalisation perturbs Tr rho log rho by at most O(d * floor * |ln floor|).
LOG_FLOOR = 1e-12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class ValidationError(ValueError):
    """An operator violates a structural invariant (Hermiticity, trace, ...)."""


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.conj().T


def _square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    return A


def hermitianize(A) -> np.ndarray:
    """Return the Hermitian part (A + A^dagger) / 2."""
    A = np.asarray(A)
    return (A + A.conj().T) / 2


def validate_hermitian(H, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    H = _square(H)
    err = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if err > atol:
        raise ValidationError(f"matrix is not Hermitian (max |H - H^dagger| = {err:.3e})")
    return H


def validate_density(rho, atol: float = TRACE_ATOL) -> np.ndarray:
    rho = validate_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValidationError(f"density matrix has trace {tr!r}")
    lo = np.linalg.eigvalsh(hermitianize(rho))[0]
    if lo < -EIG_ATOL:
        raise ValidationError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def validate_unitary(U, atol: float = UNITARY_ATOL) -> np.ndarray:
    U = _square(U)
    err = frobenius_norm(U.conj().T @ U - np.eye(U.shape[0]))
    if err > atol:
        raise ValidationError(f"matrix is not unitary (||U^dagger U - I||_F = {err:.3e})")
    return U


def hermitian_eig(H) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    H = validate_hermitian(H)
    w, Q = np.linalg.eigh(hermitianize(H))
    return SpectralDecomposition(w, Q)


def spectral_apply(H, func) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix through its spectrum."""
    w, Q = hermitian_eig(H)
    return hermitianize((Q * func(w)) @ Q.conj().T)


def exp_spectral(H) -> np.ndarray:
    return spectral_apply(H, np.exp)


def matrix_log_psd(rho, floor: float = LOG_FLOOR) -> np.ndarray:
    """Matrix logarithm of a PSD operator with eigenvalues clamped below at `floor`."""
    if not floor > 0:
        raise ValidationError("floor must be positive")
    validate_density(rho)
    return spectral_apply(rho, lambda w: np.log(np.maximum(w, floor)))


def matrix_sqrt_psd(rho) -> np.ndarray:
    """Spectral square root; negative eigenvalues are clamped to zero."""
    validate_density(rho)
    return spectral_apply(rho, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def tensor(A, B) -> np.ndarray:
    return np.kron(A, B)


def partial_trace(rho_ab, dim_a: int, dim_b: int, keep: Literal["A", "B"] = "A") -> np.ndarray:
    """Reduce a bipartite operator on A (x) B to one factor.

    ``keep="A"`` traces out B and vice versa.  Works for any square operator
    of dimension ``dim_a * dim_b``; density matrices stay density matrices.
    """
    rho_ab = _square(rho_ab)
    if dim_a * dim_b != rho_ab.shape[0]:
        raise ValidationError(
            f"subsystem dimensions {dim_a}x{dim_b} do not match operator dimension {rho_ab.shape[0]}"
        )
    t = rho_ab.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValidationError(f"keep must be 'A' or 'B', got {keep!r}")


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A), "fro"))


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SU(2) from a uniform point on the 3-sphere."""
    v = rng.standard_normal(4)
    a, b = complex(v[0], v[1]), complex(v[2], v[3])
    nrm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a, b = a / nrm, b / nrm
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random U(d) via QR of a complex Ginibre matrix with the diagonal phase fix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_unit_vector(rng: np.random.Generator, dim: int = 3) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def bloch_operator(vec) -> np.ndarray:
    """Return v . sigma for a real 3-vector v."""
    x, y, z = vec
    return x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z


def bloch_state(r: float, n) -> np.ndarray:
    """Full-rank qubit state (I + r n.sigma) / 2."""
    n = np.asarray(n, dtype=float)
    if not 0 <= r < 1:
        raise ValidationError(f"Bloch radius must satisfy 0 <= r < 1, got {r}")
    if abs(np.linalg.norm(n) - 1.0) > 1e-10:
        raise ValidationError("Bloch direction must be a unit vector")
    return (I2 + r * bloch_operator(n)) / 2


def bloch_vector(rho) -> np.ndarray:
    """Real 3-vector (Tr rho sigma_x, Tr rho sigma_y, Tr rho sigma_z)."""
    return np.array([np.trace(rho @ p).real for p in PAULIS])


def su2_rotation(angle: float, axis) -> np.ndarray:
    """exp(-i angle (axis . sigma) / 2)."""
    axis = np.asarray(axis, dtype=float)
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * bloch_operator(axis)


def su2_adjoint(U) -> np.ndarray:
    """SO(3) matrix R with U (v . sigma) U^dagger = (R v) . sigma."""
    R = np.empty((3, 3))
    for j, pj in enumerate(PAULIS):
        M = U @ pj @ U.conj().T
        for i, pi in enumerate(PAULIS):
            R[i, j] = 0.5 * np.trace(pi @ M).real
    return R
