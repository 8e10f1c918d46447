import csv
import hashlib
import math
import subprocess
import sys

import numpy as np
import pytest

from krglm.cli import main
from krglm.family import LOGISTIC
from krglm.io import load_model, read_csv, read_vector
from krglm.kernels import Linear

from oracles import dense_krr_scores


def run(argv, capsys=None):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:  # argparse rejections
        code = exc.code
    out = capsys.readouterr() if capsys else None
    return code, out


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def digest(*paths):
    h = hashlib.sha256()
    for p in paths:
        h.update(open(p, "rb").read())
    return h.hexdigest()


def synthetic_csvs(tmp_path, n=60, m=40, seed=0, target_labels=False):
    rng = np.random.default_rng(seed)
    xs = rng.random(n) ** 1.5
    ys = (rng.random(n) < LOGISTIC.mean(1.5 * np.cos(2 * np.pi * xs))).astype(int)
    xt = 1 - rng.random(m) ** 1.5
    src = write(tmp_path / "source.csv", ["x", "label"], zip(xs, ys))
    if target_labels:
        yt = (rng.random(m) < LOGISTIC.mean(1.5 * np.cos(2 * np.pi * xt))).astype(int)
        tgt = write(tmp_path / "target.csv", ["x", "label"], zip(xt, yt))
    else:
        tgt = write(tmp_path / "target.csv", ["x"], [[v] for v in xt])
    return src, tgt


def binary_table(path, n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3)) * [1.0, 2.0, 0.5] + [0.0, 5.0, -1.0]
    y = (rng.random(n) < LOGISTIC.mean(X[:, 0] - 0.3 * X[:, 1] + 1.5)).astype(int)
    return write(path, ["a", "b", "c", "label"],
                 [list(r) + [int(t)] for r, t in zip(X, y)])


def test_fit_two_row_matches_dense(tmp_path, capsys):
    data = write(tmp_path / "toy.csv", ["x1", "x2", "label"],
                 [[1.0, 0.5, 2.0], [-0.5, 1.5, -1.0]])
    out = tmp_path / "m.json"
    code, cap = run(["fit", data, "--family", "gaussian", "--kernel", "linear",
                     "--lambda", "0.1", "--out", out], capsys)
    assert code == 0
    assert "converged=true" in cap.out and "iterations=1" in cap.out
    model = load_model(out)
    X = np.array([[1.0, 0.5], [-0.5, 1.5]])
    y = np.array([2.0, -1.0])
    K = Linear().gram(X)
    alpha = np.linalg.solve(K + 2 * 0.1 * np.eye(2), y)
    assert np.max(np.abs(model.alpha - alpha)) <= 1e-8
    assert np.max(np.abs(model.fitted_scores - dense_krr_scores(K, y, 0.1))) <= 1e-8


def test_fit_is_byte_identical(tmp_path):
    src, _ = synthetic_csvs(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run(["fit", src, "--family", "logistic", "--kernel", "sobolev1",
                    "--lambda", "1e-3", "--out", out])[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_model_round_trip_is_exact(tmp_path):
    src, _ = synthetic_csvs(tmp_path)
    out = tmp_path / "m.json"
    run(["fit", src, "--family", "logistic", "--kernel", "sobolev1",
         "--lambda", "1e-2", "--out", out])
    from krglm.io import save_model
    again = tmp_path / "again.json"
    save_model(load_model(out), again)
    assert out.read_bytes() == again.read_bytes()


@pytest.mark.parametrize("flag", [["--lambda", "0"], ["--lambda", "-1"],
                                  ["--lambda", "abc"]])
def test_fit_rejects_nonpositive_lambda(tmp_path, flag, capsys):
    data = write(tmp_path / "toy.csv", ["x", "label"], [[0.1, 1.0]])
    assert run(["fit", data] + flag, capsys)[0] == 2


def test_fit_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,label\n0.1,1\n0.2,oops\n")
    code, cap = run(["fit", bad, "--lambda", "1"], capsys)
    assert code == 2
    assert "row 3" in cap.err and "label" in cap.err
    short = tmp_path / "short.csv"
    short.write_text("x,label\n0.1\n")
    assert run(["fit", short, "--lambda", "1"], capsys)[0] == 2
    assert run(["fit", tmp_path / "missing.csv", "--lambda", "1"], capsys)[0] == 2


def test_fit_domain_error_exit_2(tmp_path, capsys):
    data = write(tmp_path / "wide.csv", ["x", "label"], [[1.5, 1.0], [0.2, 0.0]])
    code, _ = run(["fit", data, "--family", "logistic", "--kernel", "sobolev1",
                   "--lambda", "1"], capsys)
    assert code == 2


def test_fit_solver_error_exit_3(tmp_path, capsys, monkeypatch):
    import krglm.cli as cli
    from krglm.solver import SolverError

    def boom(*a, **k):
        raise SolverError("CG stagnated")

    monkeypatch.setattr(cli, "fit_krglm", boom)
    data = write(tmp_path / "toy.csv", ["x", "label"], [[0.1, 1.0]])
    assert run(["fit", data, "--lambda", "1"], capsys)[0] == 3


def test_select_outputs(tmp_path, capsys):
    src, tgt = synthetic_csvs(tmp_path)
    out = tmp_path / "sel"
    code, cap = run(["select", src, tgt, "--rule", "pseudo", "--rule", "naive",
                     "--out", out, "--seed", "3"], capsys)
    assert code == 0, cap.err
    with open(out / "report.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["lambda", "risk_pseudo", "risk_naive"]
    assert len(rows) - 1 == math.ceil(math.log2(10 * 60)) + 1 == 11
    assert (out / "model_pseudo.json").exists()
    with open(out / "chosen.csv") as fh:
        chosen = list(csv.DictReader(fh))
    assert [r["rule"] for r in chosen] == ["pseudo", "naive"]


def test_select_pseudo_oracle_coincide_via_truth_file(tmp_path, capsys):
    src, tgt = synthetic_csvs(tmp_path)
    first = tmp_path / "first"
    assert run(["select", src, tgt, "--rule", "pseudo", "--out", first,
                "--seed", "1"], capsys)[0] == 0
    truth = first / "imputer_scores.csv"
    second = tmp_path / "second"
    assert run(["select", src, tgt, "--rule", "pseudo", "--rule", "oracle",
                "--truth-scores", truth, "--out", second, "--seed", "1"],
               capsys)[0] == 0
    with open(second / "chosen.csv") as fh:
        chosen = {r["rule"]: r["chosen_lambda"] for r in csv.DictReader(fh)}
    assert chosen["pseudo"] == chosen["oracle"]
    with open(second / "report.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["risk_pseudo"] == r["risk_oracle"] for r in rows)


def test_select_oracle_needs_labels(tmp_path, capsys):
    src, tgt = synthetic_csvs(tmp_path)
    code, cap = run(["select", src, tgt, "--rule", "oracle",
                     "--out", tmp_path / "o"], capsys)
    assert code == 2 and "oracle" in cap.err
    src, tgt = synthetic_csvs(tmp_path, target_labels=True)
    assert run(["select", src, tgt, "--rule", "oracle",
                "--out", tmp_path / "o"], capsys)[0] == 0


def test_select_seed_env_fallback(tmp_path, monkeypatch, capsys):
    src, tgt = synthetic_csvs(tmp_path)
    monkeypatch.setenv("KRGLM_SEED", "5")
    run(["select", src, tgt, "--out", tmp_path / "env"], capsys)
    monkeypatch.delenv("KRGLM_SEED")
    run(["select", src, tgt, "--out", tmp_path / "flag", "--seed", "5"], capsys)
    run(["select", src, tgt, "--out", tmp_path / "other", "--seed", "6"], capsys)
    env = (tmp_path / "env" / "report.csv").read_bytes()
    assert env == (tmp_path / "flag" / "report.csv").read_bytes()
    assert env != (tmp_path / "other" / "report.csv").read_bytes()
    monkeypatch.setenv("KRGLM_SEED", "not-a-number")
    assert run(["select", src, tgt, "--out", tmp_path / "x"], capsys)[0] == 2


def test_config_file(tmp_path, capsys):
    src, tgt = synthetic_csvs(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nseed = 5\nrule = pseudo, naive\nimputer_lambda = 1e-3\n")
    run(["select", src, tgt, "--config", cfg, "--out", tmp_path / "cfg"], capsys)
    run(["select", src, tgt, "--rule", "pseudo", "--rule", "naive",
         "--imputer-lambda", "1e-3", "--seed", "5", "--out", tmp_path / "flags"],
        capsys)
    assert (tmp_path / "cfg" / "report.csv").read_bytes() == \
        (tmp_path / "flags" / "report.csv").read_bytes()
    # flags override the file
    run(["select", src, tgt, "--config", cfg, "--seed", "6", "--out",
         tmp_path / "over"], capsys)
    run(["select", src, tgt, "--rule", "pseudo", "--rule", "naive",
         "--imputer-lambda", "1e-3", "--seed", "6", "--out", tmp_path / "six"],
        capsys)
    assert (tmp_path / "over" / "report.csv").read_bytes() == \
        (tmp_path / "six" / "report.csv").read_bytes()


def test_config_rejects_unknown_key(tmp_path, capsys):
    src, tgt = synthetic_csvs(tmp_path)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("seed = 1\ncolour = blue\n")
    code, cap = run(["select", src, tgt, "--config", cfg], capsys)
    assert code == 2 and "colour" in cap.err


def test_config_supplies_lambda(tmp_path, capsys):
    data = write(tmp_path / "toy.csv", ["x", "label"], [[0.1, 1.0], [0.4, 2.0]])
    cfg = tmp_path / "fit.cfg"
    cfg.write_text("lambda = 0.5\n")
    assert run(["fit", data, "--config", cfg, "--out", tmp_path / "m.json"],
               capsys)[0] == 0
    assert load_model(tmp_path / "m.json").lam == 0.5
    cfg.write_text("lambda = 0\n")
    assert run(["fit", data, "--config", cfg], capsys)[0] == 2
    assert run(["fit", data], capsys)[0] == 2


def test_synth_smoke_and_round_trip(tmp_path, capsys):
    out = tmp_path / "s"
    code, cap = run(["synth", "--n-list", "400,800", "--trials", "5",
                     "--bootstrap", "200", "--svg", "--out", out, "--jobs", "1"],
                    capsys)
    assert code == 0, cap.err
    with open(out / "summary.csv") as fh:
        summary = list(csv.DictReader(fh))
    assert [r["rule"] for r in summary] == ["pseudo", "oracle", "naive"]
    assert all(np.isfinite(float(r["alpha"])) for r in summary)
    with open(out / "results.csv") as fh:
        results = list(csv.DictReader(fh))
    assert len(results) == 2 * 5 * 3
    keys = [(int(r["n"]), int(r["trial"])) for r in results]
    assert keys == sorted(keys)
    # summary means recompute from the written per-trial values
    for row in summary:
        for n in (400, 800):
            vals = [float(r["excess_risk"]) for r in results
                    if r["rule"] == row["rule"] and int(r["n"]) == n]
            assert abs(np.mean(vals) - float(row[f"mean_n{n}"])) <= 1e-12
    assert (out / "fig.svg").read_text().startswith("<svg")


def test_synth_rejects_odd_n(tmp_path, capsys):
    assert run(["synth", "--n-list", "401", "--trials", "1",
                "--out", tmp_path / "s"], capsys)[0] == 2


def test_synth_failures_exit_3(tmp_path, capsys, monkeypatch):
    import krglm.experiments as ex

    def always_fail(task):
        return task[0], task[1], "SolverError: forced"

    monkeypatch.setattr(ex, "synth_trial", always_fail)
    code, cap = run(["synth", "--n-list", "40,80", "--trials", "2", "--jobs", "1",
                     "--out", tmp_path / "s"], capsys)
    assert code == 3 and "4 of 4 trials failed" in cap.err


def test_real_summary_schema(tmp_path, capsys):
    data = binary_table(tmp_path / "bin.csv")
    out = tmp_path / "r"
    code, cap = run(["real", data, "--K", "2", "--R", "2", "--seeds", "3",
                     "--n-lambda", "5", "--out", out, "--jobs", "1"], capsys)
    assert code == 0, cap.err
    with open(out / "summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["rule", "mean", "ci_lo", "ci_hi", "se"]
    assert [r[0] for r in rows[1:]] == ["naive", "pseudo-labeling", "oracle"]
    with open(out / "results.csv") as fh:
        res = list(csv.DictReader(fh))
    assert len(res) == 9
    naive = [float(r["test_risk"]) for r in res if r["rule"] == "naive"]
    assert abs(float(rows[1][1]) - np.mean(naive)) <= 1e-12


def test_real_single_seed_warns(tmp_path, capsys):
    data = binary_table(tmp_path / "bin.csv")
    code, cap = run(["real", data, "--R", "1", "--seeds", "1", "--n-lambda", "3",
                     "--out", tmp_path / "r", "--jobs", "1"], capsys)
    assert code == 0
    assert "warning" in cap.err
    with open(tmp_path / "r" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["se"]) == 0.0 and r["ci_lo"] == r["ci_hi"] for r in rows)


def test_real_rejects_nonbinary(tmp_path, capsys):
    data = write(tmp_path / "cont.csv", ["a", "label"],
                 [[float(i), i * 0.5] for i in range(20)])
    assert run(["real", data, "--out", tmp_path / "r"], capsys)[0] == 2


def test_neff(tmp_path, capsys):
    src, _ = synthetic_csvs(tmp_path)
    code, cap = run(["neff", src, src, "--kernel", "sobolev1"], capsys)
    assert code == 0
    assert "ratio=1\n" in cap.out
    rng = np.random.default_rng(0)
    s, t = 0.3 * rng.normal(size=12), 2.0 * rng.normal(size=7)
    a = write(tmp_path / "s.csv", ["x"], [[v] for v in s])
    b = write(tmp_path / "t.csv", ["x"], [[v] for v in t])
    code, cap = run(["neff", a, b, "--kernel", "linear", "--c", "0.5"], capsys)
    expected = min(12, (12 * np.mean(s ** 2) + 0.5) / np.mean(t ** 2))
    got = float(cap.out.split()[0].split("=")[1])
    assert abs(got - expected) <= 1e-8
    assert run(["neff", a, b, "--c", "0"], capsys)[0] == 2
    wide = write(tmp_path / "w.csv", ["x"], [[2.0]])
    assert run(["neff", wide, wide, "--kernel", "sobolev1"], capsys)[0] == 2


def test_read_vector_header_optional(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("score\n1.5\n-2\n")
    assert read_vector(p).tolist() == [1.5, -2.0]
    p.write_text("1.5\n-2\n")
    assert read_vector(p).tolist() == [1.5, -2.0]


def test_read_csv_label_optional(tmp_path):
    p = write(tmp_path / "t.csv", ["a", "b"], [[1, 2], [3, 4]])
    data, features = read_csv(p)
    assert data.y is None and features == ["a", "b"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "krglm", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "krglm", "fit",
                           str(tmp_path / "nope.csv"), "--lambda", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


@pytest.mark.parametrize("jobs", ["1", "8"])
def test_synth_rerun_byte_identical(tmp_path, jobs, capsys):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        run(["synth", "--n-list", "200,400", "--trials", "3", "--bootstrap",
             "100", "--svg", "--out", out, "--jobs", jobs, "--seed", "2"], capsys)
        outs.append(digest(out / "results.csv", out / "summary.csv", out / "fig.svg"))
    assert outs[0] == outs[1]


def test_synth_jobs_do_not_change_output(tmp_path, capsys):
    for jobs in ("1", "3"):
        run(["synth", "--n-list", "200,400", "--trials", "3", "--bootstrap", "100",
             "--out", tmp_path / jobs, "--jobs", jobs], capsys)
    assert digest(tmp_path / "1" / "results.csv", tmp_path / "1" / "summary.csv") == \
        digest(tmp_path / "3" / "results.csv", tmp_path / "3" / "summary.csv")
