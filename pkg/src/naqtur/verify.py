"""Identity and inequality suite behind ``naqtur verify``.

Each check returns a :class:`CheckResult` with the worst residual found and
the tolerance it was held to.  Tolerances for the quadrature-based checks
are relaxed when a quadrature order below the default is requested; the
relaxed value is reported with the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import collision as col
from .harness import derive_seed
from .divergence import (
    BURES_HELLINGER,
    KL,
    chi2_lambda,
    f_divergence_via_weights,
    gauss_legendre,
    hellinger_affinity,
    petz_f_divergence_spectral,
    relative_entropy,
)
from .qcore import (
    bloch_state,
    exp_spectral,
    frobenius_norm,
    haar_unitary,
    hermitian_eig,
    matrix_log_psd,
    partial_trace,
    random_unit_vector,
    tensor,
)
from .tur import (
    F_closed,
    G_of_D,
    bound_B,
    matrix_tur_check,
    optimal_direction,
    witness_bound_integral,
    witness_h,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<38s} worst={self.worst:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def kl_integral_rtol(order: int) -> float:
    """Relative tolerance of the KL chi^2_lambda integral at a given Gauss-Legendre order."""
    if order >= 32:
        return 1e-6
    if order >= 16:
        return 1e-4
    if order >= 8:
        return 1e-2
    return 2e-1


def hellinger_atol(order: int) -> float:
    if order >= 32:
        return 1e-4
    if order >= 16:
        return 1e-3
    if order >= 8:
        return 1e-2
    return 5e-2


def random_qubit_state(rng: np.random.Generator, r_max: float = 0.95) -> np.ndarray:
    return bloch_state(rng.uniform(0, r_max), random_unit_vector(rng))


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (g + g.conj().T) / 2


# --- checks -------------------------------------------------------------------------


def check_eig_reconstruction(rng, n=1000):
    worst = 0.0
    for i in range(n):
        H = random_hermitian(2 if i % 2 else 4, rng)
        dec = hermitian_eig(H)
        worst = max(worst, frobenius_norm(H - dec.reconstruct()) / max(1.0, frobenius_norm(H)))
    return CheckResult("qcore: eigendecomposition", worst <= 1e-10, worst, 1e-10)


def check_log_exp(rng, n=300):
    worst = 0.0
    for i in range(n):
        H = random_hermitian(2 if i % 2 else 4, rng)
        w = np.linalg.eigvalsh(H)
        H = H * (5 / max(abs(w).max(), 1e-300)) * rng.uniform(0.1, 1)
        E = exp_spectral(H)
        rho = E / np.trace(E).real
        worst = max(worst, frobenius_norm(matrix_log_psd(rho) + math.log(np.trace(E).real) * np.eye(len(H)) - H))
    return CheckResult("qcore: log(exp(H)) = H", worst <= 1e-8, worst, 1e-8)


def check_partial_trace(rng, n=300):
    worst = 0.0
    for _ in range(n):
        A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        worst = max(worst, frobenius_norm(partial_trace(tensor(A, B), 2, 2, "A") - A * np.trace(B)))
        rho = random_density(4, rng)
        worst = max(worst, abs(np.trace(partial_trace(rho, 2, 2, "A")) - 1))
    return CheckResult("qcore: partial trace round trip", worst <= 1e-12, worst, 1e-12)


def check_kl_integral(rng, order, n=1000):
    quad = gauss_legendre(order)
    rtol = kl_integral_rtol(order)
    worst = 0.0
    for _ in range(n):
        a, b = random_qubit_state(rng), random_qubit_state(rng)
        D = relative_entropy(a, b)
        excess = abs(D - f_divergence_via_weights(a, b, KL, quad)) / max(1e-8, rtol * D)
        worst = max(worst, excess)
    return CheckResult(
        "divergence: KL = int lam chi2_lam", worst <= 1.0, worst, 1.0,
        f"(residual / max(1e-8, {rtol:g} D), order {order})",
    )  # fmt: skip


def check_petz_oracle(rng, n=1000):
    def tlogt(t):
        return np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)

    worst = 0.0
    for _ in range(n):
        a, b = random_qubit_state(rng), random_qubit_state(rng)
        worst = max(worst, abs(relative_entropy(a, b) - petz_f_divergence_spectral(a, b, tlogt)))
    return CheckResult("divergence: Petz spectral oracle", worst <= 1e-10, worst, 1e-10)


def check_chi2_symmetry(rng, n=300):
    worst = 0.0
    for _ in range(n):
        a, b = random_qubit_state(rng), random_qubit_state(rng)
        lam = rng.uniform(0.01, 0.99)
        worst = max(worst, abs(chi2_lambda(a, b, lam) - chi2_lambda(b, a, 1 - lam)))
    return CheckResult("divergence: chi2 (rho,sigma,lam) swap", worst <= 1e-10, worst, 1e-10)


def check_hellinger_weight(rng, order, n=300):
    quad = gauss_legendre(order)
    tol = hellinger_atol(order)
    worst = 0.0
    for _ in range(n):
        a, b = random_qubit_state(rng), random_qubit_state(rng)
        worst = max(worst, abs(hellinger_affinity(a, b) - f_divergence_via_weights(a, b, BURES_HELLINGER, quad)))
    return CheckResult("divergence: Hellinger weight", worst <= tol, worst, tol, f"(order {order})")


def check_closed_form(rng, order):
    quad = gauss_legendre(max(order, 64))
    worst = 0.0
    for s in np.logspace(-4, 2, 61):
        V = np.diag(rng.uniform(0.05, 0.25, size=2))
        u = random_unit_vector(rng, 2)
        dq = u * math.sqrt(s / (u @ np.linalg.inv(V) @ u))
        worst = max(worst, abs(bound_B(dq, V, V, quad).B - F_closed(s)))
    return CheckResult("tur: B(V'=V) = F(s)", worst <= 1e-8, worst, 1e-8)


def check_inverse_pair():
    worst = max(abs(F_closed(G_of_D(D)) - D) for D in np.logspace(-6, 1, 71))
    return CheckResult("tur: F(G(D)) = D", worst <= 1e-10, worst, 1e-10)


def check_small_s():
    worst = 0.0
    for s in np.logspace(-6, -1, 51):
        worst = max(worst, abs(F_closed(s) - (s / 2 - s * s / 12)) / (0.02 * s**3))
    return CheckResult("tur: F(s) = s/2 - s^2/12 + O(s^3)", worst <= 1.0, worst, 1.0, "(residual / 0.02 s^3)")


def random_psd_triple(rng):
    A = rng.standard_normal((2, 2))
    V = A @ A.T + 1e-3 * np.eye(2)
    D = float(10 ** rng.uniform(-4, 1))
    G = G_of_D(D)
    u = random_unit_vector(rng, 2)
    target = G * 10 ** rng.uniform(-0.5, 0.5)
    dq = u * math.sqrt(target / (u @ np.linalg.inv(V) @ u))
    return V, dq, D


def check_psd_equivalence(rng, n=1000):
    tol = 1e-10
    bad = 0
    for _ in range(n):
        V, dq, D = random_psd_triple(rng)
        s = float(dq @ np.linalg.solve(V, dq))
        G = G_of_D(D)
        if abs(G - s) <= tol * max(1.0, G):
            continue
        if (matrix_tur_check(V, dq, D) >= -tol) != (s <= G):
            bad += 1
    return CheckResult("tur: PSD witness <=> s <= G(D)", bad == 0, float(bad), 0.0, "(disagreements)")


def check_records(records, order):
    bound_tol = 1e-9
    viol = sigma_viol = 0
    split = 0.0
    for r in records:
        if r.violates_bound(bound_tol):
            viol += 1
        if r.sigma < r.d_bath - 1e-12:
            sigma_viol += 1
        split = max(split, abs(r.sigma - r.mutual_info - r.d_bath))
    return [
        CheckResult("collision: D_bath >= B", viol == 0, float(viol), 0.0, f"(violations, order {order})"),
        CheckResult("collision: Sigma >= D_bath", sigma_viol == 0, float(sigma_viol), 0.0, "(violations)"),
        CheckResult("collision: Sigma = I + D_bath", split <= 1e-10, split, 1e-10),
    ]


def check_witness_dominance(records, rng, order, n_dirs=100):
    quad = gauss_legendre(order)
    worst = -math.inf
    for r in records:
        if r.flagged:
            continue
        for _ in range(n_dirs):
            u = random_unit_vector(rng, 2)
            worst = max(worst, witness_bound_integral(u, r.dq, r.V, r.Vp, quad) - r.bound_B)
    opt_gap = 0.0
    for r in records[:50]:
        for lam in (0.1, 0.5, 0.9):
            u = optimal_direction(r.dq, r.V, r.Vp, lam)
            M = (1 - lam) * r.Vp + lam * r.V
            s = float(r.dq @ np.linalg.solve(M, r.dq))
            quotient = float(witness_h(u @ r.dq, u @ r.Vp @ u, u @ r.V @ u, lam))
            opt_gap = max(opt_gap, abs(quotient - s / (1 + lam * (1 - lam) * s)))
    return [
        CheckResult("tur: witness <= B", worst <= 1e-12, max(worst, 0.0), 1e-12),
        CheckResult("tur: optimizer attains supremum", opt_gap <= 1e-10, opt_gap, 1e-10),
    ]


def check_fixed_point(rng, n=1000):
    worst = 0.0
    cfg = col.CollisionConfig()
    for _ in range(n):
        rho_e, _, _ = col.sample_bath(cfg, rng)
        U = col.fixed_point_unitary(rho_e, rng)
        ee = tensor(rho_e, rho_e)
        worst = max(worst, frobenius_norm(U @ ee @ U.conj().T - ee))
    return CheckResult("collision: U_fp fixes rho_E x rho_E", worst <= 1e-12, worst, 1e-12)


def check_haar_moment(rng, n=10_000):
    d = 2
    vals = np.array([abs(haar_unitary(d, rng)[0, 0]) ** 2 for _ in range(n)])
    z = abs(vals.mean() - 1 / d) / (vals.std() / math.sqrt(n))
    return CheckResult("qcore: Haar E|U00|^2 = 1/d", z <= 3, z, 3.0, "(z-score)")


def run_suite(
    quadrature_order: int = 64, seed: int = 0, n_records: int = 600
) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    quad = gauss_legendre(quadrature_order)
    records = []
    for m, mode in enumerate(col.SYSTEM_MODES):
        cfg = col.CollisionConfig(system_mode=mode, seed=seed)
        for i in range(n_records // 3):
            records.append(col.simulate_one(cfg, derive_seed(seed, m * n_records + i), quad))
    checks: list[Callable[[], CheckResult | list[CheckResult]]] = [
        lambda: check_eig_reconstruction(rng),
        lambda: check_log_exp(rng),
        lambda: check_partial_trace(rng),
        lambda: check_haar_moment(rng),
        lambda: check_kl_integral(rng, quadrature_order),
        lambda: check_petz_oracle(rng),
        lambda: check_chi2_symmetry(rng),
        lambda: check_hellinger_weight(rng, quadrature_order),
        lambda: check_closed_form(rng, quadrature_order),
        check_inverse_pair,
        check_small_s,
        lambda: check_psd_equivalence(rng),
        lambda: check_records(records, quadrature_order),
        lambda: check_witness_dominance(records, rng, quadrature_order),
        lambda: check_fixed_point(rng),
    ]
    results: list[CheckResult] = []
    for check in checks:
        out = check()
        results.extend(out if isinstance(out, list) else [out])
    return results
