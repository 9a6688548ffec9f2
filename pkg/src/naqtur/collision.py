"""One-shot strong-coupling collision between a system qubit S and a bath probe E.

A collision is described by a :class:`CollisionParams` value (bath Bloch
vector, system preparation, swap angle, fixed-point block, charge frame).
``sample_params`` draws it from a seeded generator and ``evaluate`` turns it
into a :class:`CollisionRecord`; the split lets the saturation hunt perturb
parameters of promising samples directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .divergence import QuadratureRule, gauss_legendre, relative_entropy
from .qcore import (
    I2,
    LOG_FLOOR,
    SIGMA_X,
    SIGMA_Z,
    bloch_operator,
    bloch_state,
    frobenius_norm,
    haar_su2,
    haar_unitary,
    hermitian_eig,
    hermitianize,
    partial_trace,
    random_unit_vector,
    su2_adjoint,
    su2_rotation,
    tensor,
)
from .tur import ChargeSet, bound_B, covariance_matrix, current_vector, robertson_C

HAAR_ISOSPECTRAL = "haar-isospectral"
SMALL_ISOSPECTRAL = "small-isospectral"
INDEPENDENT = "independent"
MIXED = "mixed"
SYSTEM_MODES = (HAAR_ISOSPECTRAL, SMALL_ISOSPECTRAL, INDEPENDENT)

_MODE_ALIASES = {
    "haarisospectral": HAAR_ISOSPECTRAL,
    "haar": HAAR_ISOSPECTRAL,
    "smallisospectral": SMALL_ISOSPECTRAL,
    "small": SMALL_ISOSPECTRAL,
    "independentrandom": INDEPENDENT,
    "independent": INDEPENDENT,
    "mixed": MIXED,
}

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
    dtype=complex,
)

# near-pure tail of the bath radius mixture: r = r_max - Exp(rate)
R_TAIL_RATE = 10.0


def normalize_mode(mode: str) -> str:
    key = mode.replace("-", "").replace("_", "").lower()
    try:
        return _MODE_ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown system mode {mode!r}") from None


@dataclass(frozen=True)
class CollisionConfig:
    r_min: float = 0.1
    r_max: float = 0.95
    phi_min: float = 0.05
    phi_max: float = 1.57
    system_mode: str = HAAR_ISOSPECTRAL
    eps_min: float = 1e-3
    eps_max: float = 0.3
    k: int = 2
    random_frame: bool = True
    use_fixed_point_unitary: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "system_mode", normalize_mode(self.system_mode))
        if not 0 < self.r_min <= self.r_max < 1:
            raise ValueError("need 0 < r_min <= r_max < 1")
        if not 0 < self.phi_min <= self.phi_max <= math.pi / 2:
            raise ValueError("need 0 < phi_min <= phi_max <= pi/2")
        if not 0 < self.eps_min <= self.eps_max:
            raise ValueError("need 0 < eps_min <= eps_max")
        if self.k != 2:
            raise ValueError("only k = 2 charges are supported")


@dataclass(frozen=True)
class CollisionParams:
    """Every random choice that defines one collision."""

    mode: str
    r: float
    n: np.ndarray
    frame: np.ndarray
    phi: float
    eps: float = math.nan
    axis: np.ndarray | None = None
    system_unitary: np.ndarray | None = None
    r_s: float = math.nan
    n_s: np.ndarray | None = None
    alpha: float = 0.0
    beta: float = 0.0
    u2: np.ndarray | None = None


@dataclass
class CollisionRecord:
    sigma: float
    mutual_info: float
    d_bath: float
    bound_B: float
    s_simple: float
    F_of_s: float
    gap_abs: float
    rel_slack: float
    cov_drift: float
    robertson_C: float
    dq: np.ndarray
    V: np.ndarray
    Vp: np.ndarray
    r: float
    n: np.ndarray
    phi: float
    eps: float
    mode: str
    k: int
    random_frame: bool
    range_residual: float
    flags: tuple[str, ...]
    sample_seed: int
    sample_id: int = 0
    strategy: str = "monte-carlo"
    round: int = 0
    parent_id: int = -1
    params: CollisionParams | None = field(default=None, repr=False, compare=False)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)

    @property
    def dq_norm(self) -> float:
        return float(np.linalg.norm(self.dq))

    def violates_bound(self, tol: float = 1e-9) -> bool:
        return not self.flagged and self.d_bath < self.bound_B - tol


# --- state preparation -------------------------------------------------------


def _draw_r(config: CollisionConfig, rng: np.random.Generator) -> float:
    if rng.random() < 0.5:
        return float(rng.uniform(config.r_min, config.r_max))
    while True:
        r = config.r_max - rng.exponential(1 / R_TAIL_RATE)
        if r >= config.r_min:
            return float(r)


def sample_bath(config: CollisionConfig, rng: np.random.Generator):
    """Draw (rho_E, r, n) with n uniform on the sphere and r from the radius mixture."""
    r = _draw_r(config, rng)
    n = random_unit_vector(rng)
    return bloch_state(r, n), r, n


def charges_from_frame(R) -> ChargeSet:
    """Q_1 = (R x).sigma / 2, Q_2 = (R z).sigma / 2."""
    R = np.asarray(R, dtype=float)
    q1 = bloch_operator(R[:, 0]) / 2
    q2 = bloch_operator(R[:, 2]) / 2
    return ChargeSet((q1, q2), frame=R, labels=("Q_Rx", "Q_Rz"))


def sample_charges(k: int, random_frame: bool, rng: np.random.Generator) -> ChargeSet:
    """Default frame gives (sigma_x/2, sigma_z/2); otherwise R is uniform on SO(3)."""
    if k != 2:
        raise ValueError("only k = 2 charges are supported")
    if not random_frame:
        return ChargeSet((SIGMA_X / 2, SIGMA_Z / 2), labels=("Q_X", "Q_Z"))
    return charges_from_frame(su2_adjoint(haar_su2(rng)))


def _draw_system(mode: str, config: CollisionConfig, rng: np.random.Generator) -> dict:
    if mode == HAAR_ISOSPECTRAL:
        return {"system_unitary": haar_su2(rng)}
    if mode == SMALL_ISOSPECTRAL:
        lo, hi = math.log(config.eps_min), math.log(config.eps_max)
        return {"eps": float(math.exp(rng.uniform(lo, hi))), "axis": random_unit_vector(rng)}
    if mode == INDEPENDENT:
        return {"r_s": _draw_r(config, rng), "n_s": random_unit_vector(rng)}
    raise ValueError(f"unknown system mode {mode!r}")


def system_state(params: CollisionParams, rho_e) -> np.ndarray:
    if params.mode == HAAR_ISOSPECTRAL:
        U = params.system_unitary
    elif params.mode == SMALL_ISOSPECTRAL:
        U = su2_rotation(params.eps, params.axis)
    else:
        return bloch_state(params.r_s, params.n_s)
    return hermitianize(U @ rho_e @ U.conj().T)


def sample_system(mode: str, rho_e, config: CollisionConfig, rng: np.random.Generator) -> np.ndarray:
    mode = normalize_mode(mode)
    drawn = _draw_system(mode, config, rng)
    params = CollisionParams(mode=mode, r=0.0, n=np.zeros(3), frame=np.eye(3), phi=0.0, **drawn)
    return system_state(params, rho_e)


# --- interaction ---------------------------------------------------------------


def partial_swap(phi: float) -> np.ndarray:
    """exp(-i phi SWAP) = cos(phi) I - i sin(phi) SWAP."""
    return math.cos(phi) * np.eye(4) - 1j * math.sin(phi) * SWAP


def bath_eigenbasis(rho_e) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors with the first nonzero entry of each made real positive."""
    p, W = hermitian_eig(rho_e)
    W = W.copy()
    for j in range(W.shape[1]):
        col = W[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)[0]
        W[:, j] = col * (abs(col[idx]) / col[idx])
    return p, W


def fixed_point_unitary_from(rho_e, alpha: float, beta: float, u2) -> np.ndarray:
    """(W x W) diag(e^{i alpha}, u2, e^{i beta}) (W x W)^dagger in the eigenbasis of rho_E."""
    _, W = bath_eigenbasis(rho_e)
    block = np.zeros((4, 4), dtype=complex)
    block[0, 0] = np.exp(1j * alpha)
    block[1:3, 1:3] = u2
    block[3, 3] = np.exp(1j * beta)
    WW = tensor(W, W)
    return WW @ block @ WW.conj().T


def fixed_point_unitary(rho_e, rng: np.random.Generator) -> np.ndarray:
    """Random unitary with U (rho_E x rho_E) U^dagger = rho_E x rho_E."""
    alpha, beta = rng.uniform(0, 2 * math.pi, size=2)
    return fixed_point_unitary_from(rho_e, alpha, beta, haar_unitary(2, rng))


def compose_interaction(phi: float, u_fp) -> np.ndarray:
    return partial_swap(phi) @ u_fp


def run_collision(rho_s, rho_e, u_se):
    """Return (rho_SE', rho_S', rho_E')."""
    rho_se = hermitianize(u_se @ tensor(rho_s, rho_e) @ u_se.conj().T)
    return rho_se, partial_trace(rho_se, 2, 2, "A"), partial_trace(rho_se, 2, 2, "B")


# --- thermodynamic scalars -------------------------------------------------------


def entropy_production(rho_se, rho_s_prime, rho_e, floor: float = LOG_FLOOR) -> float:
    """Sigma = D(rho_SE' || rho_S' x rho_E)."""
    return relative_entropy(rho_se, tensor(rho_s_prime, rho_e), floor)


def mutual_information(rho_se, rho_s_prime, rho_e_prime, floor: float = LOG_FLOOR) -> float:
    """I(S:E) = D(rho_SE' || rho_S' x rho_E')."""
    return relative_entropy(rho_se, tensor(rho_s_prime, rho_e_prime), floor)


# --- full pipeline ----------------------------------------------------------------


def sample_params(config: CollisionConfig, rng: np.random.Generator) -> CollisionParams:
    mode = config.system_mode
    if mode == MIXED:
        mode = SYSTEM_MODES[int(rng.integers(len(SYSTEM_MODES)))]
    _, r, n = sample_bath(config, rng)
    frame = sample_charges(config.k, config.random_frame, rng).frame
    drawn = _draw_system(mode, config, rng)
    phi = float(rng.uniform(config.phi_min, config.phi_max))
    if config.use_fixed_point_unitary:
        alpha, beta = (float(a) for a in rng.uniform(0, 2 * math.pi, size=2))
        u2 = haar_unitary(2, rng)
    else:
        alpha = beta = 0.0
        u2 = None
    return CollisionParams(
        mode=mode, r=r, n=n, frame=frame, phi=phi, alpha=alpha, beta=beta, u2=u2, **drawn
    )


def evaluate(
    params: CollisionParams,
    config: CollisionConfig,
    quad: QuadratureRule | None = None,
    sample_seed: int = 0,
    floor: float = LOG_FLOOR,
) -> CollisionRecord:
    """Run the collision described by ``params`` and compute every record field."""
    quad = quad or gauss_legendre()
    rho_e = bloch_state(params.r, params.n)
    charges = charges_from_frame(params.frame)
    rho_s = system_state(params, rho_e)
    u_se = partial_swap(params.phi)
    if params.u2 is not None:
        u_se = compose_interaction(params.phi, fixed_point_unitary_from(rho_e, params.alpha, params.beta, params.u2))
    rho_se, rho_s_p, rho_e_p = run_collision(rho_s, rho_e, u_se)

    sigma = entropy_production(rho_se, rho_s_p, rho_e, floor)
    d_bath = relative_entropy(rho_e_p, rho_e, floor)
    mi = mutual_information(rho_se, rho_s_p, rho_e_p, floor)

    dq = current_vector(rho_e, rho_e_p, charges)
    V = covariance_matrix(rho_e, charges)
    Vp = covariance_matrix(rho_e_p, charges)
    report = bound_B(dq, V, Vp, quad)
    B = report.B
    if d_bath > 0:
        rel_slack = 1 - B / d_bath
    else:
        rel_slack = 0.0 if B == 0 else -math.inf
    return CollisionRecord(
        sigma=sigma,
        mutual_info=mi,
        d_bath=d_bath,
        bound_B=B,
        s_simple=report.s_simple,
        F_of_s=report.F_of_s,
        gap_abs=d_bath - B,
        rel_slack=rel_slack,
        cov_drift=frobenius_norm(Vp - V) / frobenius_norm(V),
        robertson_C=robertson_C(rho_e, charges[0], charges[1]),
        dq=dq,
        V=V,
        Vp=Vp,
        r=params.r,
        n=np.asarray(params.n),
        phi=params.phi,
        eps=params.eps,
        mode=params.mode,
        k=len(charges),
        random_frame=config.random_frame,
        range_residual=report.range_residual,
        flags=report.flags,
        sample_seed=sample_seed,
        params=params,
    )


def simulate_one(
    config: CollisionConfig, sample_seed: int, quad: QuadratureRule | None = None
) -> CollisionRecord:
    """Deterministic function of (config, sample_seed)."""
    rng = np.random.default_rng(sample_seed)
    return evaluate(sample_params(config, rng), config, quad, sample_seed)


# --- perturbation (saturation hunt) -------------------------------------------------


def _small_su2(scale: float, rng: np.random.Generator) -> np.ndarray:
    return su2_rotation(scale * math.pi * rng.standard_normal(), random_unit_vector(rng))


def _jitter_direction(n, scale: float, rng: np.random.Generator) -> np.ndarray:
    v = np.asarray(n) + scale * rng.standard_normal(3)
    return v / np.linalg.norm(v)


def perturb_params(
    params: CollisionParams, config: CollisionConfig, scale: float, rng: np.random.Generator
) -> CollisionParams:
    """Gaussian jitter of every continuous parameter; ``scale`` is relative to each range.

    The system mode is kept; bounded quantities are clipped into their ranges.
    """
    def clip(x, lo, hi):
        return float(min(max(x, lo), hi))

    r = clip(params.r + scale * (config.r_max - config.r_min) * rng.standard_normal(), config.r_min, config.r_max)
    n = _jitter_direction(params.n, scale, rng)
    phi = clip(
        params.phi + scale * (config.phi_max - config.phi_min) * rng.standard_normal(),
        config.phi_min,
        config.phi_max,
    )
    frame = params.frame
    if config.random_frame:
        frame = su2_adjoint(_small_su2(scale, rng)) @ frame
    changes = dict(r=r, n=n, phi=phi, frame=frame)
    if params.mode == HAAR_ISOSPECTRAL:
        changes["system_unitary"] = _small_su2(scale, rng) @ params.system_unitary
    elif params.mode == SMALL_ISOSPECTRAL:
        lo, hi = math.log(config.eps_min), math.log(config.eps_max)
        log_eps = clip(math.log(params.eps) + scale * (hi - lo) * rng.standard_normal(), lo, hi)
        changes["eps"] = math.exp(log_eps)
        changes["axis"] = _jitter_direction(params.axis, scale, rng)
    else:
        changes["r_s"] = clip(
            params.r_s + scale * (config.r_max - config.r_min) * rng.standard_normal(),
            config.r_min,
            config.r_max,
        )
        changes["n_s"] = _jitter_direction(params.n_s, scale, rng)
    if params.u2 is not None:
        da, db = scale * 2 * math.pi * rng.standard_normal(2)
        changes["alpha"] = (params.alpha + da) % (2 * math.pi)
        changes["beta"] = (params.beta + db) % (2 * math.pi)
        phase = np.exp(1j * scale * math.pi * rng.standard_normal())
        changes["u2"] = phase * _small_su2(scale, rng) @ params.u2
    return replace(params, **changes)
