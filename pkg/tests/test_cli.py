"""Command-line behavior: schemas, exit codes, seeds, output identity."""

import csv
import dataclasses
import io
import json
import math

import pytest

from nestmc.cli import RunConfig, _cell, main
from nestmc.models import CATALOG


@pytest.fixture(autouse=True)
def _no_ambient_seed(monkeypatch):
    monkeypatch.delenv("NESTMC_SEED", raising=False)


def run_cli(capsys, argv):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def parse_csv(text):
    """Split CSV output into (header, data rows, trailing comment lines)."""
    lines = text.splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    table = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(table))))
    return rows[0], rows[1:], comments


# ------------------------------------------------------------------ models list

def test_models_list(capsys):
    code, out, _ = run_cli(capsys, ["models", "list"])
    assert code == 0
    lines = out.splitlines()
    names = [ln.split()[0] for ln in lines]
    assert names == ["bias-quad-neg", "bias-quad-pos", "constant", "gauss-log",
                     "linear-gauss"]
    gauss = next(ln for ln in lines if ln.startswith("gauss-log"))
    assert "truth=-1.163844" in gauss
    assert "tags=" in gauss


def test_models_action_defaults_to_list(capsys):
    code_explicit, out_explicit, _ = run_cli(capsys, ["models", "list"])
    code_default, out_default, _ = run_cli(capsys, ["models"])
    assert (code_default, out_default) == (code_explicit, out_explicit)


# -------------------------------------------------------------------- converge

def test_converge_csv_layout(capsys):
    code, out, _ = run_cli(capsys, ["converge", "--model", "gauss-log",
                                    "--budgets", "16:65536:7",
                                    "--reps", "5", "--seed", "3"])
    assert code == 0
    header, rows, comments = parse_csv(out)
    assert header == ["T", "N", "M", "reps", "mean", "mse", "mse_se",
                      "degenerate_frac"]
    assert [int(r[0]) for r in rows] == [4**k for k in range(2, 9)]
    assert all(int(r[1]) == int(r[2]) == int(math.isqrt(int(r[0]))) for r in rows)
    assert all(r[3] == "5" for r in rows)
    for r in rows:
        assert all(math.isfinite(float(cell)) for cell in r[4:])
    assert len(comments) == 1 and comments[0].startswith("# slope=")


def test_converge_comma_grid_sorted_with_schedule(capsys):
    code, out, _ = run_cli(capsys, ["converge", "--model", "gauss-log",
                                    "--budgets", "256,16", "--reps", "6",
                                    "--rep-schedule", "256:3", "--seed", "0"])
    assert code == 0
    _, rows, _ = parse_csv(out)
    assert [(int(r[0]), int(r[3])) for r in rows] == [(16, 6), (256, 3)]


def test_converge_zero_mse_note(capsys):
    code, out, _ = run_cli(capsys, ["converge", "--model", "constant",
                                    "--budgets", "16,64", "--reps", "4",
                                    "--seed", "0"])
    assert code == 0
    *_, comments = parse_csv(out)
    assert comments == ["# slope=none note=degenerate: zero MSE"]


@pytest.mark.parametrize("argv", [
    ["converge", "--model", "gauss-log", "--budgets", "100:10:3"],
    ["converge", "--model", "no-such-model", "--budgets", "16,64"],
    ["converge", "--model", "gauss-log", "--budgets", "10:100"],
    ["converge", "--model", "gauss-log", "--budgets", "16,64", "--reps", "1"],
    ["collapse", "--model", "gauss-log", "--budgets", "16,64"],
    ["allocate", "--model", "gauss-log", "--T", "2",
     "--policies", "tau:alpha=1,c=1", "--reps", "4"],
    ["allocate", "--model", "gauss-log", "--T", "64", "--policies", " ; "],
    ["converge", "--model", "gauss-log", "--budgets", "16,64",
     "--policy", "tau:beta=1"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, argv)
    assert code == 2
    assert err.startswith("error:")


@pytest.mark.parametrize("argv", [
    ["converge", "--model", "gauss-log"],          # missing --budgets
    ["bias", "--model", "gauss-log", "--Ms", "2"],  # missing --N
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2
    capsys.readouterr()


def test_degenerate_rows_exit_3(capsys, monkeypatch):
    # Integrand that is never finite: every row flags, cells say so.
    base = CATALOG["gauss-log"]()
    bad = dataclasses.replace(base, name="never-finite", truth=0.0,
                              f=lambda y, w: float("nan"),
                              outer_batch=None, inner_batch=None,
                              linear_g=None, expected_nmc_value=None)
    monkeypatch.setitem(CATALOG, "never-finite", lambda: bad)
    code, out, _ = run_cli(capsys, ["converge", "--model", "never-finite",
                                    "--budgets", "16,64", "--reps", "3",
                                    "--seed", "0"])
    assert code == 3
    _, rows, comments = parse_csv(out)
    for r in rows:
        assert r[4] == r[5] == r[6] == "degenerate"
        assert float(r[7]) == 1.0
    assert comments[0].startswith("# slope=none note=")


# ------------------------------------------------------------------------ bias

def test_bias_csv_with_predictions(capsys):
    code, out, _ = run_cli(capsys, ["bias", "--model", "bias-quad-pos",
                                    "--N", "50", "--Ms", "8,2",
                                    "--reps", "30", "--seed", "0"])
    assert code == 0
    header, rows, comments = parse_csv(out)
    assert header == ["M", "N", "reps", "mean_error", "se", "predicted"]
    assert [int(r[0]) for r in rows] == [2, 8]
    assert all(r[1] == "50" and r[2] == "30" for r in rows)
    for r in rows:
        assert float(r[3]) > 0
        assert float(r[5]) == pytest.approx(0.0844 / int(r[0]), rel=0.01)
    assert comments[0].startswith("# slope=")


def test_bias_without_prediction_leaves_cell_blank(capsys):
    _, out, _ = run_cli(capsys, ["bias", "--model", "gauss-log", "--N", "100",
                                 "--Ms", "2:32:3", "--reps", "40", "--seed", "0"])
    _, rows, _ = parse_csv(out)
    assert [int(r[0]) for r in rows] == [2, 8, 32]  # geometric Ms grid
    assert all(r[5] == "" for r in rows)
    assert all(float(r[3]) < 0 for r in rows)


# -------------------------------------------------------------------- allocate

def test_allocate_csv_ranking(capsys):
    code, out, _ = run_cli(capsys, ["allocate", "--model", "gauss-log",
                                    "--T", "4096", "--reps", "40", "--seed", "1",
                                    "--policies",
                                    "tau:alpha=2,c=1;tau:alpha=1,c=1"])
    assert code == 0
    header, rows, comments = parse_csv(out)
    assert header == ["policy", "N", "M", "mse", "mse_se", "rank"]
    assert [int(r[5]) for r in rows] == [1, 2]
    mses = [float(r[3]) for r in rows]
    assert mses == sorted(mses)
    assert {r[0] for r in rows} == {"tau:alpha=1,c=1", "tau:alpha=2,c=1"}
    assert comments == []
    # policy names contain commas, so the raw cells must be quoted
    assert '"tau:alpha=1,c=1"' in out


def test_allocate_tie_comment(capsys):
    code, out, _ = run_cli(capsys, ["allocate", "--model", "constant",
                                    "--T", "256", "--reps", "5", "--seed", "0",
                                    "--policies", "tau:alpha=1,c=1;fixed-inner:M=4"])
    assert code == 0
    *_, comments = parse_csv(out)
    assert comments == ["# tie=true"]


# -------------------------------------------------------------------- collapse

def test_collapse_csv_layout(capsys):
    code, out, _ = run_cli(capsys, ["collapse", "--model", "linear-gauss",
                                    "--budgets", "100,1000", "--reps", "25",
                                    "--seed", "2"])
    assert code == 0
    header, rows, comments = parse_csv(out)
    assert header == ["estimator"] + ["T", "N", "M", "reps", "mean", "mse",
                                      "mse_se", "degenerate_frac"]
    assert [(r[0], int(r[1]), int(r[2]), int(r[3])) for r in rows] == [
        ("collapsed", 100, 100, 1), ("collapsed", 1000, 1000, 1),
        ("nested", 100, 10, 10), ("nested", 1000, 31, 31)]
    assert comments[0].startswith("# collapsed_slope=")
    assert comments[1].startswith("# nested_slope=")


# ------------------------------------------------------------------------ json

def test_converge_json_shape(capsys):
    code, out, _ = run_cli(capsys, ["converge", "--model", "gauss-log",
                                    "--budgets", "16,64,256", "--reps", "5",
                                    "--seed", "4", "--format", "json",
                                    "--drop-smallest", "1"])
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"metadata", "rows", "fit", "fit_note"}
    assert set(doc["metadata"]) == {"model", "policy", "seed", "version"}
    assert doc["metadata"]["model"] == "gauss-log"
    assert doc["metadata"]["policy"] == "tau:alpha=1,c=1"  # default policy
    assert doc["metadata"]["seed"] == 4
    assert set(doc["fit"]) == {"slope", "intercept", "residual_rms", "points_used"}
    assert doc["fit"]["points_used"] == 2
    assert [row["T"] for row in doc["rows"]] == [16, 64, 256]
    assert set(doc["rows"][0]) == {"T", "N", "M", "reps", "mean", "mse",
                                   "mse_se", "degenerate_frac"}


def test_bias_json_null_prediction(capsys):
    _, out, _ = run_cli(capsys, ["bias", "--model", "gauss-log", "--N", "50",
                                 "--Ms", "2,4", "--reps", "10", "--seed", "0",
                                 "--format", "json"])
    doc = json.loads(out)
    assert doc["metadata"]["policy"] is None
    assert all(row["predicted"] is None for row in doc["rows"])


def test_allocate_json_tie_and_policy_metadata(capsys):
    _, out, _ = run_cli(capsys, ["allocate", "--model", "constant", "--T", "256",
                                 "--reps", "5", "--seed", "0", "--format", "json",
                                 "--policies", "tau:alpha=1,c=1;fixed-inner:M=4"])
    doc = json.loads(out)
    assert doc["tie"] is True
    assert doc["metadata"]["policy"] == "tau:alpha=1,c=1;fixed-inner:M=4"


def test_collapse_json_two_fits(capsys):
    _, out, _ = run_cli(capsys, ["collapse", "--model", "linear-gauss",
                                 "--budgets", "100,400", "--reps", "10",
                                 "--seed", "0", "--format", "json"])
    doc = json.loads(out)
    assert set(doc) == {"metadata", "rows", "collapsed_fit", "collapsed_fit_note",
                        "nested_fit", "nested_fit_note"}
    assert [row["estimator"] for row in doc["rows"]] == ["collapsed", "collapsed",
                                                         "nested", "nested"]


# ----------------------------------------------------------------------- seeds

_SEED_ARGS = ["converge", "--model", "gauss-log", "--budgets", "16,64",
              "--reps", "4"]


def test_seed_precedence(capsys, monkeypatch):
    _, by_flag, _ = run_cli(capsys, _SEED_ARGS + ["--seed", "5"])

    monkeypatch.setenv("NESTMC_SEED", "5")
    _, by_env, _ = run_cli(capsys, _SEED_ARGS)
    assert by_env == by_flag

    monkeypatch.setenv("NESTMC_SEED", "99")
    _, flag_wins, _ = run_cli(capsys, _SEED_ARGS + ["--seed", "5"])
    assert flag_wins == by_flag

    monkeypatch.delenv("NESTMC_SEED")
    _, unseeded, _ = run_cli(capsys, _SEED_ARGS)
    _, zero, _ = run_cli(capsys, _SEED_ARGS + ["--seed", "0"])
    assert unseeded == zero


def test_invalid_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("NESTMC_SEED", "not-a-number")
    code, _, err = run_cli(capsys, _SEED_ARGS)
    assert code == 2
    assert "NESTMC_SEED" in err


# -------------------------------------------------------------- files and echo

def test_out_file_matches_stdout_and_echoes_slope(capsys, tmp_path):
    _, streamed, _ = run_cli(capsys, _SEED_ARGS + ["--seed", "1"])
    path = tmp_path / "report.csv"
    code, echoed, _ = run_cli(capsys, _SEED_ARGS + ["--seed", "1",
                                                    "--out", str(path)])
    assert code == 0
    assert path.read_text(encoding="utf-8") == streamed
    assert echoed.startswith("slope=") and echoed.count("\n") == 1


def test_collapse_out_echoes_both_slopes(capsys, tmp_path):
    path = tmp_path / "c.csv"
    _, echoed, _ = run_cli(capsys, ["collapse", "--model", "linear-gauss",
                                    "--budgets", "100,400", "--reps", "10",
                                    "--seed", "0", "--out", str(path)])
    lines = echoed.splitlines()
    assert lines[0].startswith("collapsed_slope=")
    assert lines[1].startswith("nested_slope=")


@pytest.mark.parametrize("argv", [
    ["converge", "--model", "gauss-log", "--budgets", "16,256", "--reps", "6",
     "--seed", "9"],
    ["bias", "--model", "bias-quad-pos", "--N", "40", "--Ms", "2,8",
     "--reps", "10", "--seed", "9"],
    ["allocate", "--model", "gauss-log", "--T", "1024", "--reps", "10",
     "--seed", "9", "--policies", "tau:alpha=1,c=1;tau:alpha=2,c=1"],
    ["collapse", "--model", "linear-gauss", "--budgets", "100,400",
     "--reps", "10", "--seed", "9"],
])
def test_worker_count_never_changes_bytes(capsys, tmp_path, argv):
    p1 = tmp_path / "w1.csv"
    p8 = tmp_path / "w8.csv"
    assert main(argv + ["--out", str(p1), "--workers", "1"]) == 0
    assert main(argv + ["--out", str(p8), "--workers", "8"]) == 0
    capsys.readouterr()
    assert p1.read_bytes() == p8.read_bytes()


# --------------------------------------------------------------------- config

@pytest.mark.parametrize("argv", [
    ["models", "list"],
    ["models"],
    ["converge", "--model", "gauss-log", "--budgets", "16:65536:7"],
    ["converge", "--model", "gauss-log", "--budgets", "16,64",
     "--policy", "fixed-inner:M=8", "--rep-schedule", "64:100",
     "--drop-smallest", "2", "--reps", "50", "--seed", "11",
     "--out", "x.csv", "--format", "json", "--workers", "4"],
    ["bias", "--model", "bias-quad-neg", "--N", "100", "--Ms", "2:32:5"],
    ["allocate", "--model", "gauss-log", "--T", "65536",
     "--policies", "tau:alpha=0.5,c=1;tau:alpha=1,c=1"],
    ["collapse", "--model", "linear-gauss", "--budgets", "100:10000:4",
     "--seed", "0"],
])
def test_runconfig_round_trip(argv):
    cfg = RunConfig.parse(argv)
    assert RunConfig.parse(cfg.to_args()) == cfg


def test_cell_rendering():
    assert _cell(None) == ""
    assert _cell(float("nan")) == "degenerate"
    assert _cell(float("inf")) == "degenerate"
    assert _cell(0.125) == "0.125"
    assert _cell(7) == "7"
