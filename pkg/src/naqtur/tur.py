"""Currents, covariance geometry and the matrix TUR bound.

The central quantity is the integral bound

    B(dq, V, V') = int_0^1 lam s_lam / (1 + lam (1 - lam) s_lam) dlam,
    s_lam = dq^T ((1 - lam) V' + lam V)^+ dq,

which lower-bounds the bath relative entropy D(rho_E' || rho_E).  When
V' = V it collapses to the closed form ``F_closed(s)``; inverting that
gives the positive-semidefinite witness ``V - f(D) dq dq^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import brentq

from .divergence import KL, QuadratureRule, WeightFunction, gauss_legendre
from .qcore import validate_hermitian

PINV_RTOL = 1e-12
RANGE_TOL = 1e-8
ROBERTSON_EPS = 1e-15


@dataclass(frozen=True)
class ChargeSet:
    """Hermitian charge observables on the probe plus the frame that generated them."""

    charges: tuple[np.ndarray, ...]
    frame: np.ndarray = field(default_factory=lambda: np.eye(3))
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        for q in self.charges:
            validate_hermitian(q)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.charges)

    def __len__(self) -> int:
        return len(self.charges)

    def __getitem__(self, i) -> np.ndarray:
        return self.charges[i]


@dataclass(frozen=True)
class BoundReport:
    B: float
    s_simple: float
    F_of_s: float
    range_residual: float
    flags: tuple[str, ...] = ()

    @property
    def flagged(self) -> bool:
        return bool(self.flags)


def _expect(tau, op) -> float:
    return float(np.trace(tau @ op).real)


def current_vector(rho_e, rho_e_prime, charges: Sequence[np.ndarray]) -> np.ndarray:
    """dq_u = Tr[(rho_E' - rho_E) Q_u]."""
    delta = np.asarray(rho_e_prime) - np.asarray(rho_e)
    return np.array([_expect(delta, q) for q in charges])


def covariance_matrix(tau, charges: Sequence[np.ndarray]) -> np.ndarray:
    """Symmetrised covariance V_uv = Tr[tau {dQ_u, dQ_v}] / 2 with dQ = Q - <Q>."""
    tau = np.asarray(tau)
    eye = np.eye(tau.shape[0])
    centred = [q - _expect(tau, q) * eye for q in charges]
    m = len(centred)
    V = np.empty((m, m))
    for u in range(m):
        for v in range(u, m):
            anti = centred[u] @ centred[v] + centred[v] @ centred[u]
            V[u, v] = V[v, u] = 0.5 * _expect(tau, anti)
    return V


def _s_lambda_batch(dq, V, Vp, lams, tol: float = PINV_RTOL):
    dq = np.asarray(dq, dtype=float)
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    Vl = (1 - lams)[:, None, None] * np.asarray(Vp)[None] + lams[:, None, None] * np.asarray(V)[None]
    w, Q = np.linalg.eigh(Vl)
    c = np.einsum("nij,i->nj", Q, dq)
    wmax = w[:, -1:]
    keep = (w >= tol * wmax) & (wmax > 0)
    s = np.sum(np.where(keep, c**2 / np.where(keep, w, 1.0), 0.0), axis=1)
    outside = np.sqrt(np.sum(np.where(keep, 0.0, c**2), axis=1))
    residual = outside / max(float(np.linalg.norm(dq)), 1e-300)
    return s, residual


def s_lambda(dq, V, Vp, lam: float, tol: float = PINV_RTOL) -> tuple[float, float]:
    """Return ``(s, range_residual)`` for V_lam = (1 - lam) V' + lam V.

    The pseudo-inverse drops eigenvalues below ``tol * lambda_max``;
    ``range_residual`` is the relative norm of the part of dq that falls in
    the discarded subspace.
    """
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    s, res = _s_lambda_batch(dq, V, Vp, lam, tol)
    return float(s[0]), float(res[0])


def bound_integrand(s, lam):
    return lam * s / (1 + lam * (1 - lam) * s)


def _weighted_bound(dq, V, Vp, w: WeightFunction, quad: QuadratureRule):
    s, res = _s_lambda_batch(dq, V, Vp, quad.nodes)
    residual = float(res.max())
    lam = quad.nodes
    value = quad.integrate(w(lam) * s / (1 + lam * (1 - lam) * s))
    return value, residual


def bound_B(dq, V, Vp, quad: QuadratureRule | None = None) -> BoundReport:
    """Matrix TUR bound with the KL weight, plus the symmetric-covariance diagnostics.

    A current with a component outside the range of some V_lam (relative
    residual above 1e-8) yields ``B = inf`` and the flag ``"range"``.
    """
    quad = quad or gauss_legendre()
    B, residual = _weighted_bound(dq, V, Vp, KL, quad)
    s_simple, res1 = s_lambda(dq, V, V, 1.0)
    flags = []
    if residual > RANGE_TOL or res1 > RANGE_TOL:
        flags.append("range")
        B = float("inf")
    return BoundReport(
        B=B,
        s_simple=s_simple,
        F_of_s=float(F_closed(s_simple)),
        range_residual=max(residual, res1),
        flags=tuple(flags),
    )


def bound_B_f(dq, V, Vp, w: WeightFunction, quad: QuadratureRule | None = None) -> float:
    """Bound for a general Petz f-divergence with chi^2_lambda weight ``w``."""
    quad = quad or gauss_legendre()
    value, residual = _weighted_bound(dq, V, Vp, w, quad)
    return float("inf") if residual > RANGE_TOL else value


def F_closed(s):
    """Symmetric-covariance bound F(s) = 2 sqrt(s/(s+4)) artanh sqrt(s/(s+4)).

    Uses artanh(sqrt(s/(s+4))) = asinh(sqrt(s)/2), which stays accurate for
    large s where the artanh argument approaches one.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("F_closed requires s >= 0")
    with np.errstate(invalid="ignore"):
        t = np.where(np.isinf(s), 1.0, np.sqrt(s / (s + 4)))
    out = 2 * t * np.arcsinh(np.sqrt(s) / 2)
    return out if out.ndim else float(out)


def g_inverse(y: float) -> float:
    """Inverse of x -> x tanh(x) on x >= 0.

    Brent's method on the bracket [0, max(2, y + 1)] (valid since
    x tanh x >= x - 1), polished by Newton steps.
    """
    if y < 0:
        raise ValueError("g_inverse requires y >= 0")
    if y == 0:
        return 0.0
    if np.isinf(y):
        return float("inf")

    def h(x):
        return x * np.tanh(x) - y

    x = brentq(h, 0.0, max(2.0, y + 1.0), xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(3):
        th = np.tanh(x)
        slope = th + x * (1 - th * th)
        if slope <= 0:
            break
        step = h(x) / slope
        x -= step
        if abs(step) <= 1e-16 * max(1.0, x):
            break
    return float(x)


def G_of_D(D: float) -> float:
    """Inverse of F_closed: G(D) = 4 sinh^2(g(D/2))."""
    if D < 0:
        raise ValueError("G_of_D requires D >= 0")
    return float(4 * np.sinh(g_inverse(D / 2)) ** 2)


def f_of_D(D: float) -> float:
    """f(D) = 1 / G(D) = csch^2(g(D/2)) / 4; +inf at D = 0."""
    if D < 0:
        raise ValueError("f_of_D requires D >= 0")
    if D == 0:
        return float("inf")
    return 1.0 / G_of_D(D)


def matrix_tur_check(V, dq, D_bath: float) -> float:
    """Minimum eigenvalue of V - f(D_bath) dq dq^T (>= 0 iff s <= G(D_bath))."""
    V = np.asarray(V, dtype=float)
    dq = np.asarray(dq, dtype=float)
    if not np.any(dq):
        return float(np.linalg.eigvalsh(V)[0])
    f = f_of_D(D_bath)
    if np.isinf(f):
        return float("-inf")
    return float(np.linalg.eigvalsh(V - f * np.outer(dq, dq))[0])


def witness_h(x, y, z, lam):
    """Chapman-Robbins contrast x^2 / ((1-lam) y + lam z + lam (1-lam) x^2)."""
    x, y, z, lam = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, lam)))
    den = (1 - lam) * y + lam * z + lam * (1 - lam) * x**2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x == 0, 0.0, np.where(den > 0, x**2 / np.where(den > 0, den, 1.0), np.inf))
    return out if out.ndim else float(out)


def witness_bound_integral(
    u, dq, V, Vp, quad: QuadratureRule | None = None, w: WeightFunction = KL
) -> float:
    """Scalar witness bound int w(lam) h_lam(u.dq, u^T V' u, u^T V u) dlam for one direction u."""
    quad = quad or gauss_legendre()
    u = np.asarray(u, dtype=float)
    x = float(u @ np.asarray(dq))
    y = float(u @ np.asarray(Vp) @ u)
    z = float(u @ np.asarray(V) @ u)
    return quad.integrate(w(quad.nodes) * witness_h(x, y, z, quad.nodes))


def optimal_direction(dq, V, Vp, lam: float) -> np.ndarray:
    """Maximiser u = M_lam^+ dq of the fixed-lambda witness quotient."""
    M = (1 - lam) * np.asarray(Vp) + lam * np.asarray(V)
    return np.linalg.pinv(M, rcond=PINV_RTOL, hermitian=True) @ np.asarray(dq, dtype=float)


def robertson_C(rho_e, Q1, Q2, eps: float = ROBERTSON_EPS) -> float:
    """|<i[Q1, Q2]>| / (2 sqrt(V_11 V_22) + eps), in [0, 1] by Robertson's inequality."""
    comm = 1j * (Q1 @ Q2 - Q2 @ Q1)
    V = covariance_matrix(rho_e, (Q1, Q2))
    num = abs(np.trace(np.asarray(rho_e) @ comm).real)
    return float(num / (2 * np.sqrt(max(V[0, 0], 0.0) * max(V[1, 1], 0.0)) + eps))
