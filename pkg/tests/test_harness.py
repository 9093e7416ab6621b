import csv
import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodal_lab import cli, experiments
from nodal_lab.errors import ConfigError, DegenerateSampleError
from nodal_lab.experiments import ExperimentConfig, parse_sweep
from nodal_lab.harness import emit_report, load_report, report_csv, run_experiment, summarize


def _cfg(**kw):
    base = dict(experiment="roots", ensemble="rfs_window", n=1, d=6, trials=12, seed=3)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_parse_sweep_forms():
    assert parse_sweep("d=4:32:4") == (4, 8, 12, 16, 20, 24, 28, 32)
    assert parse_sweep("d=10,14") == (10, 14)
    assert parse_sweep("d=3:5") == (3, 4, 5)
    assert parse_sweep([14, 10, 10]) == (10, 14)
    for bad in ("4:32", "d=4:32:0", "d=a,b", "d=5:4"):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


@given(lo=st.integers(1, 50), span=st.integers(0, 50), step=st.integers(1, 10))
def test_parse_sweep_range_property(lo, span, step):
    vals = parse_sweep(f"d={lo}:{lo + span}:{step}")
    assert vals[0] == lo and vals[-1] <= lo + span
    assert list(vals) == sorted(vals)
    assert len(vals) == span // step + 1


@pytest.mark.parametrize(
    "bad",
    [
        dict(experiment="nope"),
        dict(ensemble="determinantal", n=1),
        dict(trials=0),
        dict(experiment="components", n=1),
        dict(experiment="barrier-check", n=2, ensemble="kostlan"),
        dict(seed=-1),
        dict(unknown_field=1),
        dict(experiment="volume", n=1),
    ],
)
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        _cfg(**bad)


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0])
    assert s["mean"] == 2.5 and s["count"] == 4
    assert s["stderr"] == pytest.approx(math.sqrt(5 / 3) / 2)
    assert s["ci95"][0] == pytest.approx(2.5 - 1.96 * s["stderr"])
    assert summarize([])["mean"] is None
    assert summarize([1.0])["stderr"] is None


def test_json_round_trip(tmp_path):
    report = run_experiment(_cfg())
    path = tmp_path / "r.json"
    emit_report(report, "json", path)
    data = load_report(path)
    assert data == json.loads(report.to_json())
    assert data["schema"] == 1 and data["experiment"] == "roots"
    run = data["runs"][0]
    assert run["trials_completed"] == 12 and run["discarded"] == 0
    assert [t["trial"] for t in run["trials"]] == list(range(12))
    assert run["predictions"]["sqrt_d_d_plus_2_over_3"] == pytest.approx(math.sqrt(16))
    assert path.read_bytes().endswith(b"\n") and b"\r\n" not in path.read_bytes()


def test_csv_rows(tmp_path):
    report = run_experiment(_cfg(trials=9))
    text = report_csv(report)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:4] == ["d", "trial", "seed", "resamples"]
    assert len(rows) - 1 == 9 + 1
    assert rows[-1][1] == "aggregate"


def test_sweep_plot(tmp_path):
    report = run_experiment(_cfg(sweep="d=10,4,8,6", trials=5))
    texts = emit_report(report, "json", tmp_path / "s.json")
    plot = (tmp_path / "s.plot.csv").read_text()
    assert plot == texts["plot"]
    rows = list(csv.reader(io.StringIO(plot)))
    assert rows[0] == ["d", "mean", "stderr"]
    assert [int(r[0]) for r in rows[1:]] == [4, 6, 8, 10]


def test_tables():
    rep = run_experiment(ExperimentConfig.from_dict(dict(experiment="delta-table", n=1, d=8)))
    row = rep.runs[0].rows[0]
    assert row["delta_exact"] == "80/3" and row["d_d_plus_2_over_3"] == pytest.approx(80 / 3)
    rep = run_experiment(ExperimentConfig.from_dict(dict(experiment="bounds-table", n=2, sweep="d=4,6")))
    assert [r.rows[0]["milnor_b"] for r in rep.runs] == [8, 22]
    assert rep.runs[1].rows[0]["harnack"] == 11


def test_parallel_output_identical():
    a = run_experiment(_cfg(jobs=1, trials=8)).to_json()
    b = run_experiment(_cfg(jobs=2, trials=8)).to_json()
    assert a == b


def test_determinism_across_runs():
    cfg = _cfg(experiment="components", n=2, d=4, trials=3)
    assert run_experiment(cfg).to_json() == run_experiment(cfg).to_json()


def test_retry_and_discard(monkeypatch):
    calls = {"n": 0}

    def flaky(cfg, d):
        def run(rng):
            calls["n"] += 1
            if calls["n"] % 2:
                raise DegenerateSampleError("forced")
            return {"roots": 1.0}

        return run

    monkeypatch.setitem(experiments._TRIALS, "roots", flaky)
    rep = run_experiment(_cfg(trials=4))
    run = rep.runs[0]
    assert len(run.records) == 4 and all(r.resamples == 1 for r in run.records)
    assert rep.within_budget


def test_cli_budget_exit(monkeypatch, capsys):
    def broken(cfg, d):
        def run(rng):
            raise DegenerateSampleError("forced")

        return run

    monkeypatch.setitem(experiments._TRIALS, "roots", broken)
    code = cli.main(["roots", "--n", "1", "--d", "5", "--trials", "3"])
    assert code == cli.EXIT_BUDGET
    data = json.loads(capsys.readouterr().out)
    assert data["within_budget"] is False and data["runs"][0]["discarded"] == 3


def test_cli_config_error_exit(capsys):
    assert cli.main(["roots", "--ensemble", "determinantal", "--n", "1"]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert cli.main([]) == cli.EXIT_CONFIG


def test_cli_config_file_and_overrides(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"experiment": "roots", "n": 1, "d": 5, "trials": 4, "seed": 9}))
    out = tmp_path / "o.csv"
    code = cli.main(["--config", str(conf), "--d", "7", "--format", "csv", "--out", str(out)])
    assert code == cli.EXIT_OK
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 + 4 + 1
    assert all(r[0] == "7" for r in rows[1:])
    assert "d=7" in capsys.readouterr().err


def test_cli_bad_config_file(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text("[1, 2]")
    assert cli.main(["--config", str(conf)]) == cli.EXIT_CONFIG
