"""Command-line entry point: ``naqtur {verify,simulate,bound,report}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import os
import sys
from pathlib import Path

import numpy as np

from .collision import CollisionConfig
from .divergence import gauss_legendre
from .harness import (
    ExperimentConfig,
    binned_average,
    read_csv,
    run,
    summarize,
    write_csv,
    write_summary_json,
)
from .tur import F_closed, bound_B

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SEED_ENV = "NAQTUR_SEED"

_COLLISION_FIELDS = {f.name: f for f in dataclasses.fields(CollisionConfig)}
_EXPERIMENT_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig) if f.name != "collision"}
_KEY_ALIASES = {"n": "n_samples", "mode": "system_mode", "master_seed": "seed"}


class UsageError(Exception):
    pass


def _coerce(default, raw: str, key: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw, 0)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise UsageError(f"invalid value {raw!r} for {key}") from None
    return None if raw.lower() in ("", "none") else raw


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(settings: dict[str, str]) -> ExperimentConfig:
    col_kwargs, exp_kwargs = {}, {}
    col_defaults, exp_defaults = CollisionConfig(), ExperimentConfig()
    for key, raw in settings.items():
        key = _KEY_ALIASES.get(key, key)
        if key in _COLLISION_FIELDS:
            col_kwargs[key] = _coerce(getattr(col_defaults, key), raw, key)
        elif key in _EXPERIMENT_FIELDS:
            exp_kwargs[key] = _coerce(getattr(exp_defaults, key), raw, key)
        else:
            raise UsageError(f"unknown configuration key {key!r}")
    try:
        return ExperimentConfig(collision=CollisionConfig(**col_kwargs), **exp_kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _resolve_seed(args, settings: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in settings:
        return int(settings["seed"], 0)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


# --- subcommands -------------------------------------------------------------------


def cmd_verify(args) -> int:
    from .verify import run_suite

    seed = _resolve_seed(args, {})
    print(f"master seed: {seed}")
    results = run_suite(quadrature_order=args.quadrature_order, seed=seed)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_VERIFY


def _simulate_settings(args) -> dict[str, str]:
    settings = {}
    if args.config:
        try:
            settings.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        settings[key.strip().replace("-", "_")] = value
    for key in ("n", "strategy", "mode", "workers", "quadrature_order", "n_bins", "hunt_rounds"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = str(value)
    return settings


def cmd_simulate(args) -> int:
    settings = _simulate_settings(args)
    seed = _resolve_seed(args, settings)
    settings["seed"] = str(seed)
    config = build_config(settings)
    print(f"master seed: {seed}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = Path(config.csv_path) if config.csv_path else out / "records.csv"
    summary_path = Path(config.summary_path) if config.summary_path else out / "summary.json"
    records = run(config)
    stats = summarize(records, config)
    write_csv(records, csv_path)
    write_summary_json(stats, summary_path, config)
    print(f"records: {stats.n_total} ({stats.n_flagged} flagged) -> {csv_path}")
    print(f"violations: {stats.n_violations}")
    print(f"summary -> {summary_path}")
    return EXIT_OK


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _bound_columns(header: list[str]) -> tuple[int, list[str], list[str], list[str]]:
    dq_cols = sorted(
        (c for c in header if c.startswith("dq_") and c[3:].isdigit()), key=lambda c: int(c[3:])
    )
    m = len(dq_cols)
    if m == 0 or [c[3:] for c in dq_cols] != [str(i) for i in range(1, m + 1)]:
        raise UsageError("input must have columns dq_1..dq_m")
    v_cols = [f"V_{i}{j}" for i in range(1, m + 1) for j in range(i, m + 1)]
    vp_cols = [f"Vp_{i}{j}" for i in range(1, m + 1) for j in range(i, m + 1)]
    missing = [c for c in v_cols + vp_cols if c not in header]
    if missing:
        raise UsageError(f"input is missing columns: {', '.join(missing)}")
    return m, dq_cols, v_cols, vp_cols


def _symmetric(values: list[float], m: int) -> np.ndarray:
    M = np.empty((m, m))
    it = iter(values)
    for i in range(m):
        for j in range(i, m):
            M[i, j] = M[j, i] = next(it)
    return M


def cmd_bound(args) -> int:
    try:
        with open(args.input, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise OSError(f"cannot read {args.input}: {exc}") from exc
    if header is None:
        raise UsageError(f"{args.input} is empty")
    m, dq_cols, v_cols, vp_cols = _bound_columns(header)
    out_cols = ["bound_B", "s_simple", "F_of_s", "range_residual"]
    out_header = header + [c for c in out_cols if c not in header]
    pos = {c: out_header.index(c) for c in out_header}
    quad = gauss_legendre(args.quadrature_order)
    out_rows, skipped = [], 0
    for lineno, row in enumerate(rows, 2):
        try:
            if len(row) != len(header):
                raise ValueError(f"expected {len(header)} fields, got {len(row)}")
            rec = dict(zip(header, row))
            dq = np.array([float(rec[c]) for c in dq_cols])
            V = _symmetric([float(rec[c]) for c in v_cols], m)
            Vp = _symmetric([float(rec[c]) for c in vp_cols], m)
            if not (np.all(np.isfinite(dq)) and np.all(np.isfinite(V)) and np.all(np.isfinite(Vp))):
                raise ValueError("non-finite input")
        except ValueError as exc:
            print(f"warning: line {lineno} skipped: {exc}", file=sys.stderr)
            skipped += 1
            continue
        report = bound_B(dq, V, Vp, quad)
        new = row + [""] * (len(out_header) - len(row))
        for key, value in zip(out_cols, (report.B, report.s_simple, report.F_of_s, report.range_residual)):
            new[pos[key]] = _fmt(value)
        out_rows.append(new)
    try:
        fh = open(args.out, "w", newline="") if args.out else sys.stdout
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(out_header)
            writer.writerows(out_rows)
        finally:
            if args.out:
                fh.close()
    except OSError as exc:
        raise OSError(f"cannot write {args.out}: {exc}") from exc
    print(f"rows: {len(out_rows)} written, {skipped} skipped", file=sys.stderr)
    return EXIT_OK


REPORT_COLUMNS = ("bound_B", "d_bath", "cov_drift", "rel_slack", "robertson_C", "dq_1")


def _write_tsv(path: Path, header, rows) -> None:
    with path.open("w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) if not isinstance(v, (int, np.integer)) else str(v) for v in row) + "\n")


def cmd_report(args) -> int:
    try:
        with open(args.input, newline="") as fh:
            header = next(csv.reader(fh), [])
    except OSError as exc:
        raise OSError(f"cannot read {args.input}: {exc}") from exc
    missing = [c for c in REPORT_COLUMNS if c not in header]
    if missing:
        raise UsageError(f"records file is missing columns: {', '.join(missing)}")
    rows = read_csv(args.input)
    dq_cols = [c for c in header if c.startswith("dq_")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        _write_tsv(
            out / "fig1_master.tsv",
            ("bound_B", "d_bath", "cov_drift"),
            [(r["bound_B"], r["d_bath"], r["cov_drift"]) for r in rows],
        )
        dq_norm = [math.sqrt(sum(r[c] ** 2 for c in dq_cols)) for r in rows]
        _write_tsv(
            out / "fig2_slack.tsv",
            ("dq_norm", "rel_slack", "robertson_C"),
            [(x, r["rel_slack"], r["robertson_C"]) for x, r in zip(dq_norm, rows)],
        )
        bins = binned_average(dq_norm, [r["rel_slack"] for r in rows], args.n_bins)
        _write_tsv(
            out / "fig2_binned.tsv",
            ("center", "lo", "hi", "count", "mean", "spread"),
            [(b["center"], b["lo"], b["hi"], b["count"], b["mean"], b["spread"]) for b in bins],
        )
        s = np.logspace(-3, 1, 200)
        _write_tsv(
            out / "inset_F.tsv",
            ("s", "F", "quadratic"),
            [(x, F_closed(x), x / 2 - x * x / 12) for x in s],
        )
    except OSError as exc:
        raise OSError(f"cannot write report files in {out}: {exc}") from exc
    print(f"report files written to {out}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="naqtur", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def seed_arg(p):
        p.add_argument("--seed", type=lambda s: int(s, 0), default=None, help=f"master seed (fallback: ${SEED_ENV}, then 0)")

    p = sub.add_parser("verify", help="run the identity/inequality suite")
    p.add_argument("--quadrature-order", type=int, default=64)
    seed_arg(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate collisions and write records CSV + summary JSON")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any configuration field")
    p.add_argument("--n", type=int)
    p.add_argument("--strategy", choices=("monte-carlo", "stratified", "saturation-hunt"))
    p.add_argument("--mode", help="system mode: haar-isospectral, small-isospectral, independent, mixed")
    p.add_argument("--workers", type=int)
    p.add_argument("--quadrature-order", type=int)
    p.add_argument("--n-bins", type=int)
    p.add_argument("--hunt-rounds", type=int)
    p.add_argument("--out", default=".", help="output directory")
    seed_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", help="evaluate the bound on (dq, V, V') rows of a CSV")
    p.add_argument("input")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--quadrature-order", type=int, default=64)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("report", help="emit plot-ready TSV files from a records CSV")
    p.add_argument("input")
    p.add_argument("--out", default="report")
    p.add_argument("--n-bins", type=int, default=25)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "quadrature_order", None) is not None and args.quadrature_order < 2:
            raise UsageError("--quadrature-order must be >= 2")
        return args.func(args)
    except UsageError as exc:
        print(f"naqtur: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"naqtur: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
