import json
import subprocess
import sys

import numpy as np
import pytest

from hofd_sense.cli import main
from hofd_sense.distributions import centered_mixture
from hofd_sense.exceptions import SpecError
from hofd_sense.experiments import (
    RECORD_FIELDS,
    SUMMARY_FIELDS,
    ExperimentConfig,
    RunRecord,
    read_records,
    run_experiment,
    summarize,
    summarize_file,
    write_records,
)


def test_config_validation():
    with pytest.raises(SpecError):
        ExperimentConfig("table4")
    with pytest.raises(SpecError):
        ExperimentConfig("bilinear", n=50)
    with pytest.raises(SpecError):
        ExperimentConfig("bilinear", reps=0)
    with pytest.raises(SpecError):
        ExperimentConfig("ishigami", ishigami_a_grid=())
    with pytest.raises(SpecError):
        ExperimentConfig("linear4", specs=(centered_mixture(0.2, np.eye(3) * 0.5),))


def test_config_structure():
    cfg = ExperimentConfig("ishigami", ishigami_a_grid=(3, 5))
    assert cfg.settings == ("a=3.0", "a=5.0")
    assert cfg.pairs.blocks == ((0, 1), (2,))
    assert ExperimentConfig("linear4").pairs.blocks == ((0, 2), (1, 3))
    assert ExperimentConfig("bilinear").dvp_subsets() == [(0,), (1,), (0, 1)]
    back = ExperimentConfig.from_json(json.dumps({"experiment": "bilinear", "n": 300}), reps=4, seed=None)
    assert (back.n, back.reps, back.seed) == (300, 4, 0)


def test_seeds_are_per_replication():
    cfg = ExperimentConfig("linear4", n=200)
    np.testing.assert_array_equal(cfg.sample(3), cfg.sample(3))
    assert not np.array_equal(cfg.sample(3), cfg.sample(4))
    other = ExperimentConfig("linear4", n=200, seed=1)
    assert not np.array_equal(cfg.sample(3), other.sample(3))


def test_run_writes_consistent_files(tmp_path):
    cfg = ExperimentConfig("bilinear", n=200, reps=3, seed=5, output_dir=str(tmp_path))
    outcome = run_experiment(cfg)
    assert outcome.ok and outcome.n_nonconverged == 0
    records = read_records(outcome.paths["records"])
    assert len(records) == len(outcome.records)
    oracle = [r for r in records if r.method == "oracle"]
    assert oracle and all(r.replication == -1 for r in oracle)
    sums = [r.estimate for r in records if r.method == "generalized" and r.index == "sum_all"]
    assert len(sums) == 3 and np.allclose(sums, 1.0, atol=1e-12)
    header = open(outcome.paths["summary"], encoding="utf-8").readline().strip()
    assert header == ",".join(SUMMARY_FIELDS)
    assert open(outcome.paths["records"], "rb").read().count(b"\r") == 0


def test_structure_does_not_depend_on_seed():
    a = run_experiment(ExperimentConfig("bilinear", n=150, reps=1, seed=1), write=False)
    b = run_experiment(ExperimentConfig("bilinear", n=150, reps=1, seed=2), write=False)
    key = [(r.setting, r.index, r.method) for r in a.records]
    assert key == [(r.setting, r.index, r.method) for r in b.records]
    assert [r.estimate for r in a.records] != [r.estimate for r in b.records]


def _rec(rep, value, method="generalized", converged=True):
    return RunRecord("bilinear", "default", rep, "S_X1", value, method, converged)


def test_summarize_single_replication():
    summary, boxplot = summarize([_rec(0, 0.4)])
    row = dict(zip(SUMMARY_FIELDS, summary[0]))
    assert row["std"] == "" and float(row["mean"]) == 0.4 and row["count"] == 1
    assert len(boxplot) == 1


def test_summarize_oracle_only():
    summary, boxplot = summarize([_rec(-1, 0.3844, "oracle")])
    row = dict(zip(SUMMARY_FIELDS, summary[0]))
    assert float(row["mean"]) == 0.3844 and float(row["std"]) == 0.0
    assert boxplot == []


def test_summarize_excludes_nonconverged_and_uses_sample_std():
    recs = [_rec(0, 1.0), _rec(1, 3.0), _rec(2, 100.0, converged=False)]
    row = dict(zip(SUMMARY_FIELDS, summarize(recs)[0][0]))
    assert float(row["mean"]) == 2.0 and float(row["std"]) == pytest.approx(np.sqrt(2.0))
    assert float(row["median"]) == 2.0 and float(row["max"]) == 3.0


def test_summarize_empty_is_an_error(tmp_path):
    with pytest.raises(ValueError):
        summarize([])
    path = tmp_path / "records.csv"
    write_records([], path)
    with pytest.raises(ValueError):
        summarize_file(path, tmp_path / "summary.csv")


def test_read_records_validates(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        read_records(bad)
    bad.write_text(",".join(RECORD_FIELDS) + "\nbilinear,default,0,S_X1,0.4,guess,true\n", encoding="utf-8")
    with pytest.raises(ValueError, match="method"):
        read_records(bad)


def test_cli_summarize_round_trip(tmp_path, capsys):
    rec = tmp_path / "records.csv"
    write_records([_rec(0, 0.4), _rec(1, 0.5), _rec(-1, 0.38, "oracle")], rec)
    out = tmp_path / "out" / "summary.csv"
    out.parent.mkdir()
    assert main(["summarize", "--in", str(rec), "--out", str(out)]) == 0
    assert out.exists() and (out.parent / "boxplot.csv").exists()
    assert main(["summarize", "--in", str(tmp_path / "missing.csv"), "--out", str(out)]) == 2


def test_cli_check(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(centered_mixture(0.2, [[0.5, 0.4], [0.4, 0.5]]).to_json(), encoding="utf-8")
    assert main(["check", "--spec", str(good)]) == 0
    assert json.loads(capsys.readouterr().out)["holds"] is True
    bad = tmp_path / "bad.json"
    bad.write_text(centered_mixture(0.2, [[1.5, 0.4], [0.4, 0.5]]).to_json(), encoding="utf-8")
    assert main(["check", "--spec", str(bad)]) == 1
    cop = tmp_path / "frank.json"
    cop.write_text(json.dumps({"family": "frank", "theta": 1.0}), encoding="utf-8")
    assert main(["check", "--spec", str(cop)]) == 0
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"alpha": 0.2}), encoding="utf-8")
    assert main(["check", "--spec", str(broken)]) == 2


def test_cli_run_gate_rejects_inadmissible_law(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    spec = json.loads(centered_mixture(0.2, [[1.5, 0.4], [0.4, 0.5]]).to_json())
    cfg.write_text(json.dumps({"experiment": "bilinear", "specs": [spec], "reps": 1}), encoding="utf-8")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "res")]) == 2
    err = capsys.readouterr().err
    assert "not positive definite" in err and "eigenvalues" in err
    assert not (tmp_path / "res").exists()


def test_cli_run_exit_codes(tmp_path, capsys):
    assert main(["run", "--n", "200"]) == 2
    assert main(["run", "--experiment", "bilinear", "--n", "20", "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "bilinear", "n": 200, "reps": 2, "max_iter": 1, "epsilon": 1e-14}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "nc")]) == 3
    assert "did not converge" in capsys.readouterr().err
    assert main(["run", "--experiment", "bilinear", "--n", "200", "--reps", "2", "--out", str(tmp_path / "ok")]) == 0
    out = capsys.readouterr().out
    assert "S_X1" in out and "records.csv" in out


def test_console_script_entry_point(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"family": "morgenstern", "theta": 1.0}), encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "hofd_sense.cli", "check", "--spec", str(spec)], capture_output=True, text=True
    )
    assert proc.returncode == 1 and '"holds": false' in proc.stdout
