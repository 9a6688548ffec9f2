import csv
import math

import numpy as np
import pytest

from naqtur.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, build_config, main, parse_config_text
from naqtur.harness import read_csv
from naqtur.tur import F_closed


def _simulate(tmp_path, *extra):
    out = tmp_path / "run"
    code = main(["simulate", "--n", "40", "--mode", "mixed", "--seed", "5", "--out", str(out), *extra])
    return code, out


def test_parse_config_text():
    text = "# comment\nn_samples = 50\n\nstrategy = stratified  # trailing\nmode=independent\n"
    settings = parse_config_text(text)
    cfg = build_config(settings)
    assert cfg.n_samples == 50 and cfg.strategy == "stratified"
    assert cfg.collision.system_mode == "independent"


@pytest.mark.parametrize("text", ["no_equals_sign\n", "bogus_key = 1\n", "n_samples = many\n"])
def test_bad_config_is_usage_error(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_USAGE


def test_verify_passes(capsys):
    assert main(["verify", "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "master seed: 3" in out and "FAIL" not in out


def test_verify_low_order_prints_relaxed_tolerance(capsys):
    assert main(["verify", "--quadrature-order", "8"]) == EXIT_OK
    assert "order 8" in capsys.readouterr().out


def test_simulate_writes_outputs_and_is_reproducible(tmp_path, capsys):
    code, out = _simulate(tmp_path)
    assert code == EXIT_OK
    stdout = capsys.readouterr().out
    assert "master seed: 5" in stdout and "violations: 0" in stdout
    first = (out / "records.csv").read_bytes()
    assert (out / "summary.json").exists()
    assert _simulate(tmp_path)[0] == EXIT_OK
    assert (out / "records.csv").read_bytes() == first


def test_seed_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NAQTUR_SEED", "77")
    assert main(["simulate", "--n", "5", "--out", str(tmp_path)]) == EXIT_OK
    assert "master seed: 77" in capsys.readouterr().out
    monkeypatch.setenv("NAQTUR_SEED", "abc")
    assert main(["simulate", "--n", "5", "--out", str(tmp_path)]) == EXIT_USAGE


def test_set_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--n", "10", "--set", "r_max=0.5", "--out", str(out)]) == EXIT_OK
    assert all(row["r"] <= 0.5 for row in read_csv(out / "records.csv"))
    assert main(["simulate", "--set", "nonsense", "--out", str(out)]) == EXIT_USAGE


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--frobnicate"])
    assert exc.value.code == EXIT_USAGE


def test_io_error_exit_code(tmp_path):
    assert main(["bound", str(tmp_path / "absent.csv")]) == EXIT_IO
    assert main(["report", str(tmp_path / "absent.csv")]) == EXIT_IO


def test_bound_reproduces_simulated_column(tmp_path):
    _, out = _simulate(tmp_path)
    dest = tmp_path / "bound.csv"
    assert main(["bound", str(out / "records.csv"), "--out", str(dest)]) == EXIT_OK
    original = read_csv(out / "records.csv")
    recomputed = read_csv(dest)
    assert len(original) == len(recomputed)
    for a, b in zip(original, recomputed):
        assert abs(a["bound_B"] - b["bound_B"]) <= 1e-12


def _write_rows(path, rows):
    header = ["dq_1", "dq_2", "V_11", "V_12", "V_22", "Vp_11", "Vp_12", "Vp_22"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def test_bound_edge_rows(tmp_path, capsys):
    src, dest = tmp_path / "in.csv", tmp_path / "out.csv"
    s = 0.7
    _write_rows(
        src,
        [
            [0, 0, 1, 0, 1, 1, 0, 1],
            [math.sqrt(s), 0, 1, 0, 1, 1, 0, 1],
            [1, 1, 1, 0, 0, 1, 0, 0],
            ["x", 0, 1, 0, 1, 1, 0, 1],
            [1, 2],
        ],
    )
    assert main(["bound", str(src), "--out", str(dest)]) == EXIT_OK
    assert "2 skipped" in capsys.readouterr().err
    with open(dest, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert float(rows[0]["bound_B"]) == 0.0
    assert abs(float(rows[1]["bound_B"]) - F_closed(s)) <= 1e-8
    assert rows[2]["bound_B"] == "inf"


def test_report_files(tmp_path):
    _, out = _simulate(tmp_path)
    rep = tmp_path / "rep"
    assert main(["report", str(out / "records.csv"), "--out", str(rep)]) == EXIT_OK
    fig1 = (rep / "fig1_master.tsv").read_text().splitlines()
    assert fig1[0].split("\t") == ["bound_B", "d_bath", "cov_drift"]
    assert len(fig1) == 41
    binned = (rep / "fig2_binned.tsv").read_text().splitlines()
    assert len(binned) == 26
    inset = np.loadtxt(rep / "inset_F.tsv", skiprows=1)
    np.testing.assert_allclose(inset[:, 1], F_closed(inset[:, 0]), rtol=1e-15)
    assert main(["report", str(out / "records.csv"), "--out", str(rep), "--n-bins", "7"]) == EXIT_OK
    assert len((rep / "fig2_binned.tsv").read_text().splitlines()) == 8


def test_report_missing_columns(tmp_path, capsys):
    src = tmp_path / "thin.csv"
    src.write_text("bound_B,d_bath\n0.1,0.2\n")
    assert main(["report", str(src), "--out", str(tmp_path / "r")]) == EXIT_USAGE
    assert "cov_drift" in capsys.readouterr().err
