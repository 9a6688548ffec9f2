"""Quantum divergences and their chi^2_lambda integral representations."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .qcore import (
    LOG_FLOOR,
    ValidationError,
    hermitian_eig,
    matrix_log_psd,
    matrix_sqrt_psd,
    validate_density,
)

DEFAULT_ORDER = 64
DENOM_FLOOR = 1e-14


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on [0, 1]; the weights sum to one."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class WeightFunction:
    tag: str
    evaluate: Callable[[np.ndarray], np.ndarray]

    def __call__(self, lam):
        return self.evaluate(lam)


KL = WeightFunction("KL", lambda lam: np.asarray(lam, dtype=float))
BURES_HELLINGER = WeightFunction(
    "BuresHellinger", lambda lam: np.sqrt(np.asarray(lam) * (1 - np.asarray(lam))) / np.pi
)


@lru_cache(maxsize=None)
def gauss_legendre(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Gauss-Legendre rule mapped from [-1, 1] to [0, 1]."""
    if order < 2:
        raise ValueError(f"quadrature order must be >= 2, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = (x + 1) / 2
    weights = w / 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, order)


def relative_entropy(rho, sigma, floor: float = LOG_FLOOR) -> float:
    """Umegaki relative entropy Tr rho (log rho - log sigma), natural log."""
    diff = matrix_log_psd(rho, floor) - matrix_log_psd(sigma, floor)
    return float(np.trace(rho @ diff).real)


def _chi2_modes(rho, sigma):
    # rho = A diag(P) A^dagger, sigma = B diag(Q) B^dagger, M = A^dagger (rho - sigma) B
    validate_density(rho)
    validate_density(sigma)
    P, A = hermitian_eig(rho)
    Q, B = hermitian_eig(sigma)
    M = A.conj().T @ (rho - sigma) @ B
    return np.abs(M) ** 2, P, Q


def _chi2_from_modes(m2, P, Q, lams):
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    denom = (1 - lams)[:, None, None] * P[None, :, None] + lams[:, None, None] * Q[None, None, :]
    small = denom < DENOM_FLOOR
    vals = np.sum(m2[None] / np.where(small, DENOM_FLOOR, denom), axis=(1, 2))
    return vals, bool(small.any())


def chi2_lambda(rho, sigma, lam: float, *, full_output: bool = False):
    """Quadratic contrast Tr[(rho - sigma) K^{-1} (rho - sigma)], K = (1-lam) L_rho + lam R_sigma.

    Evaluated in the two eigenbases: sum_ij |M_ij|^2 / ((1-lam) P_i + lam Q_j).
    Denominators below 1e-14 are regularised; with ``full_output=True`` the
    function returns ``(value, regularized)`` so the caller can flag it.
    """
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    vals, flagged = _chi2_from_modes(*_chi2_modes(rho, sigma), lam)
    if full_output:
        return float(vals[0]), flagged
    return float(vals[0])


def petz_f_divergence_spectral(rho, sigma, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Petz quasi-entropy Tr[sigma^{1/2} f(Delta) sigma^{1/2}] from the modular operator spectrum.

    Delta = L_rho R_sigma^{-1} has eigenvalues p_i / q_j on |i_rho><j_sigma|,
    so the quasi-entropy is sum_ij q_j f(p_i / q_j) |<i_rho|j_sigma>|^2.
    """
    validate_density(rho)
    validate_density(sigma)
    p, A = hermitian_eig(rho)
    q, B = hermitian_eig(sigma)
    if q[0] <= 1e-15:
        raise ValidationError("petz_f_divergence_spectral needs a full-rank sigma")
    p = np.clip(p, 0.0, None)
    overlap = np.abs(A.conj().T @ B) ** 2
    ratio = p[:, None] / q[None, :]
    return float(np.sum(q[None, :] * f(ratio) * overlap))


def f_divergence_via_weights(
    rho, sigma, w: WeightFunction = KL, quad: QuadratureRule | None = None
) -> float:
    """sum_k weight_k w(node_k) chi2_lambda(rho, sigma, node_k)."""
    quad = quad or gauss_legendre()
    vals, _ = _chi2_from_modes(*_chi2_modes(rho, sigma), quad.nodes)
    return quad.integrate(w(quad.nodes) * vals)


def hellinger_affinity(rho, sigma) -> float:
    """1 - Tr(sqrt(rho) sqrt(sigma))."""
    return float(1.0 - np.trace(matrix_sqrt_psd(rho) @ matrix_sqrt_psd(sigma)).real)
