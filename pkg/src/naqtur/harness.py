"""Experiment orchestration: sampling strategies, summary statistics and persistence.

Every sample gets its own seed ``derive_seed(master, sample_id)``, so the
output is independent of how many worker processes evaluate it.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .collision import CollisionConfig, CollisionRecord, evaluate, perturb_params, simulate_one
from .divergence import gauss_legendre

MONTE_CARLO = "monte-carlo"
STRATIFIED = "stratified"
SATURATION_HUNT = "saturation-hunt"
STRATEGIES = (MONTE_CARLO, STRATIFIED, SATURATION_HUNT)
STRAT_AXES = ("s_simple", "bound_B")

BOUND_TOL = 1e-9
SIGMA_TOL = 1e-12

CSV_COLUMNS = (
    "sample_id", "strategy", "round", "mode", "r", "phi", "eps", "k", "random_frame",
    "sigma", "mutual_info", "d_bath", "bound_B", "s_simple", "F_of_s", "gap_abs",
    "rel_slack", "cov_drift", "robertson_C", "dq_1", "dq_2", "V_11", "V_12", "V_22",
    "Vp_11", "Vp_12", "Vp_22", "range_residual", "flags", "sample_seed",
)  # fmt: skip

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """64-bit seed for sample ``index``; injective in ``index`` for a fixed master."""
    return _splitmix64((master & _MASK64) ^ _splitmix64(index & _MASK64))


def _normalize_strategy(name: str) -> str:
    key = name.replace("_", "-").lower()
    aliases = {"montecarlo": MONTE_CARLO, "mc": MONTE_CARLO, "saturationhunt": SATURATION_HUNT, "hunt": SATURATION_HUNT}
    key = aliases.get(key.replace("-", ""), key)
    if key not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")
    return key


@dataclass(frozen=True)
class ExperimentConfig:
    collision: CollisionConfig = field(default_factory=CollisionConfig)
    n_samples: int = 1000
    strategy: str = MONTE_CARLO
    strat_axis: str = "s_simple"
    n_bins: int = 20
    strat_min: float = 1e-4
    strat_max: float = 10.0
    hunt_rounds: int = 4
    hunt_keep_fraction: float = 0.2
    hunt_sigma: float = 0.1
    quadrature_order: int = 64
    report_bins: int = 25
    workers: int = 1
    csv_path: str | None = None
    summary_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", _normalize_strategy(self.strategy))
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.strat_axis not in STRAT_AXES:
            raise ValueError(f"strat_axis must be one of {STRAT_AXES}")
        if self.strategy != MONTE_CARLO and self.n_bins < 2:
            raise ValueError("stratified strategies need n_bins >= 2")
        if not 0 < self.hunt_keep_fraction < 1:
            raise ValueError("hunt_keep_fraction must lie in (0, 1)")
        if not 0 < self.strat_min < self.strat_max:
            raise ValueError("need 0 < strat_min < strat_max")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def master_seed(self) -> int:
        return self.collision.seed


@dataclass
class SummaryStats:
    n_total: int
    n_flagged: int
    n_violations: int
    n_sigma_violations: int
    max_split_residual: float
    gap_quantiles: dict
    rel_slack_quantiles: dict
    min_rel_slack: float
    frac_rel_slack_below_0_05: float
    slack_vs_dq_bins: list
    slack_robertson_corr: float
    strat_axis: str | None = None
    strat_bin_edges: list | None = None
    strat_fill_counts: list | None = None


# --- evaluation -------------------------------------------------------------------


def _evaluate_job(job):
    kind, sample_id, seed, payload, config, order = job
    quad = gauss_legendre(order)
    if kind == "fresh":
        rec = simulate_one(config, seed, quad)
    else:
        parent_params, scale = payload
        rng = np.random.default_rng(seed)
        rec = evaluate(perturb_params(parent_params, config, scale, rng), config, quad, seed)
    rec.sample_id = sample_id
    return rec


def _map(jobs: list, workers: int) -> list[CollisionRecord]:
    if workers <= 1 or len(jobs) < 2:
        return [_evaluate_job(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_job, jobs, chunksize=chunk))


def _fresh_jobs(config: ExperimentConfig, start: int, stop: int) -> list:
    return [
        ("fresh", i, derive_seed(config.master_seed, i), None, config.collision, config.quadrature_order)
        for i in range(start, stop)
    ]


def run_monte_carlo(config: ExperimentConfig) -> list[CollisionRecord]:
    """``n_samples`` independent collisions with derived seeds."""
    records = _map(_fresh_jobs(config, 0, config.n_samples), config.workers)
    return [replace(r, strategy=MONTE_CARLO) for r in records]


def strat_edges(config: ExperimentConfig) -> np.ndarray:
    return np.logspace(math.log10(config.strat_min), math.log10(config.strat_max), config.n_bins + 1)


def _bin_index(value: float, edges: np.ndarray) -> int:
    if not (np.isfinite(value) and edges[0] <= value < edges[-1]):
        return -1
    return int(np.searchsorted(edges, value, side="right") - 1)


def _axis_value(rec: CollisionRecord, axis: str) -> float:
    return rec.s_simple if axis == "s_simple" else rec.bound_B


def run_stratified(config: ExperimentConfig) -> list[CollisionRecord]:
    """Fill ``n_bins`` log-spaced bins of the stratification axis.

    Collisions are drawn in batches of ``n_samples`` until every bin holds
    ``ceil(n_samples / n_bins)`` records or ``10 * n_samples`` attempts are
    spent (ten times the per-bin target, summed over bins).  Samples that
    fall outside the axis range or into a full bin are discarded.
    """
    edges = strat_edges(config)
    target = math.ceil(config.n_samples / config.n_bins)
    budget = 10 * target * config.n_bins
    fill = [0] * config.n_bins
    kept: list[CollisionRecord] = []
    attempts = 0
    while attempts < budget and min(fill) < target:
        stop = min(attempts + config.n_samples, budget)
        for rec in _map(_fresh_jobs(config, attempts, stop), config.workers):
            b = _bin_index(_axis_value(rec, config.strat_axis), edges)
            if b >= 0 and fill[b] < target:
                fill[b] += 1
                kept.append(replace(rec, strategy=STRATIFIED))
        attempts = stop
    return kept


def run_saturation_hunt(config: ExperimentConfig, baseline: list[CollisionRecord] | None = None):
    """Iteratively perturb the smallest-slack samples of each bin.

    Round t keeps the ``hunt_keep_fraction`` best unflagged records per bin,
    spawns ``round(1 / hunt_keep_fraction)`` children from each by Gaussian
    jitter of scale ``hunt_sigma / 2**(t-1)``, and retains the children whose
    relative slack improves on their parent.  The output is the baseline plus
    every retained child, tagged with its round and parent id.
    """
    if baseline is None:
        baseline = run_stratified(config)
    edges = strat_edges(config)
    n_children = max(1, round(1 / config.hunt_keep_fraction))
    population = [r for r in baseline if not r.flagged and np.isfinite(r.rel_slack)]
    output = list(baseline)
    # child ids start past the stratified attempt budget
    next_id = 10 * math.ceil(config.n_samples / config.n_bins) * config.n_bins
    if baseline:
        next_id = max(next_id, max(r.sample_id for r in baseline) + 1)
    for t in range(1, config.hunt_rounds + 1):
        scale = config.hunt_sigma / 2 ** (t - 1)
        by_bin: dict[int, list[CollisionRecord]] = {}
        for rec in population:
            by_bin.setdefault(_bin_index(_axis_value(rec, config.strat_axis), edges), []).append(rec)
        parents = []
        for b in sorted(by_bin):
            if b < 0:
                continue
            group = sorted(by_bin[b], key=lambda r: (r.rel_slack, r.sample_id))
            parents.extend(group[: max(1, math.ceil(config.hunt_keep_fraction * len(group)))])
        jobs, origin = [], []
        for parent in parents:
            for _ in range(n_children):
                seed = derive_seed(config.master_seed, next_id)
                jobs.append(("child", next_id, seed, (parent.params, scale), config.collision, config.quadrature_order))
                origin.append(parent)
                next_id += 1
        children = _map(jobs, config.workers)
        improved = []
        for parent, child in zip(origin, children):
            if not child.flagged and child.rel_slack < parent.rel_slack:
                improved.append(
                    replace(child, strategy=SATURATION_HUNT, round=t, parent_id=parent.sample_id)
                )
        output.extend(improved)
        population = population + improved
    return output


def run(config: ExperimentConfig) -> list[CollisionRecord]:
    if config.strategy == MONTE_CARLO:
        records = run_monte_carlo(config)
    elif config.strategy == STRATIFIED:
        records = run_stratified(config)
    else:
        records = run_saturation_hunt(config)
    return sorted(records, key=lambda r: r.sample_id)


# --- statistics -------------------------------------------------------------------

QUANTILES = (0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0)


def _quantiles(values) -> dict:
    values = np.asarray([v for v in values if np.isfinite(v)])
    if values.size == 0:
        return {}
    return {f"q{int(round(q * 100)):02d}": float(np.quantile(values, q)) for q in QUANTILES}


def binned_average(x, y, n_bins: int = 25) -> list[dict]:
    """Mean and spread (standard deviation) of y in log-spaced bins of positive x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y) & (x > 0)
    x, y = x[ok], y[ok]
    if x.size == 0:
        return []
    lo, hi = x.min(), x.max()
    if lo == hi:
        hi = lo * (1 + 1e-12)
    edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    out = []
    for b in range(n_bins):
        sel = y[idx == b]
        out.append(
            {
                "lo": float(edges[b]),
                "hi": float(edges[b + 1]),
                "center": float(np.sqrt(edges[b] * edges[b + 1])),
                "count": int(sel.size),
                "mean": float(sel.mean()) if sel.size else math.nan,
                "spread": float(sel.std()) if sel.size else math.nan,
            }
        )
    return out


def summarize(records, config: ExperimentConfig | None = None) -> SummaryStats:
    if not records:
        raise ValueError("cannot summarize an empty record list")
    ok = [r for r in records if not r.flagged]
    slack = np.array([r.rel_slack for r in ok])
    C = np.array([r.robertson_C for r in ok])
    finite = np.isfinite(slack)
    if finite.sum() > 1 and np.std(slack[finite]) > 0 and np.std(C[finite]) > 0:
        corr = float(np.corrcoef(slack[finite], C[finite])[0, 1])
    else:
        corr = math.nan
    n_bins = config.report_bins if config else 25
    stats = SummaryStats(
        n_total=len(records),
        n_flagged=len(records) - len(ok),
        n_violations=sum(r.violates_bound(BOUND_TOL) for r in records),
        n_sigma_violations=sum(r.sigma < r.d_bath - SIGMA_TOL for r in records),
        max_split_residual=max(abs(r.sigma - r.mutual_info - r.d_bath) for r in records),
        gap_quantiles=_quantiles(r.gap_abs for r in ok),
        rel_slack_quantiles=_quantiles(slack),
        min_rel_slack=float(np.nanmin(slack)) if finite.any() else math.nan,
        frac_rel_slack_below_0_05=float(np.mean(slack < 0.05)) if ok else 0.0,
        slack_vs_dq_bins=binned_average([r.dq_norm for r in ok], slack, n_bins),
        slack_robertson_corr=corr,
    )
    if config is not None and config.strategy != MONTE_CARLO:
        edges = strat_edges(config)
        fill = [0] * config.n_bins
        for r in records:
            b = _bin_index(_axis_value(r, config.strat_axis), edges)
            if b >= 0:
                fill[b] += 1
        stats.strat_axis = config.strat_axis
        stats.strat_bin_edges = [float(e) for e in edges]
        stats.strat_fill_counts = fill
    return stats


# --- persistence ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def record_row(rec: CollisionRecord) -> list[str]:
    values = [
        rec.sample_id, rec.strategy, rec.round, rec.mode, rec.r, rec.phi, rec.eps, rec.k,
        rec.random_frame, rec.sigma, rec.mutual_info, rec.d_bath, rec.bound_B, rec.s_simple,
        rec.F_of_s, rec.gap_abs, rec.rel_slack, rec.cov_drift, rec.robertson_C,
        rec.dq[0], rec.dq[1], rec.V[0, 0], rec.V[0, 1], rec.V[1, 1],
        rec.Vp[0, 0], rec.Vp[0, 1], rec.Vp[1, 1], rec.range_residual, "|".join(rec.flags),
        rec.sample_seed,
    ]  # fmt: skip
    return [_fmt(v) for v in values]


def write_csv(records, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for rec in sorted(records, key=lambda r: r.sample_id):
                writer.writerow(record_row(rec))
    except OSError as exc:
        raise OSError(f"cannot write records CSV {path}: {exc}") from exc


_INT_COLUMNS = {"sample_id", "round", "k", "sample_seed"}
_STR_COLUMNS = {"strategy", "mode", "flags"}


def read_csv(path) -> list[dict]:
    """Read a records CSV back into dicts with floats/ints parsed."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"cannot read records CSV {path}: {exc}") from exc
    out = []
    for row in rows:
        parsed = {}
        for key, val in row.items():
            if key in _STR_COLUMNS:
                parsed[key] = val
            elif key in _INT_COLUMNS:
                parsed[key] = int(val)
            elif key == "random_frame":
                parsed[key] = val == "true"
            else:
                parsed[key] = float(val)
        out.append(parsed)
    return out


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_summary_json(stats: SummaryStats, path, config: ExperimentConfig | None = None) -> None:
    payload = asdict(stats)
    if config is not None:
        payload["config"] = asdict(config)
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary JSON {path}: {exc}") from exc
