import csv
import json

import pytest

from helpers import small_config
from mmnoma.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main
from mmnoma.errors import ConfigurationError
from mmnoma.harness import (CSV_HEADER, ExperimentConfig, RunResult, emit_results,
                            run_experiment, run_single)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def _write_config(tmp_path, **kw):
    cfg = small_config(**kw).to_dict()
    cfg["out"] = str(tmp_path / "out")
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_unknown_field_rejected():
    with pytest.raises(ConfigurationError, match="colour: unknown field"):
        ExperimentConfig.from_dict({"colour": "red"})


def test_validation_lists_every_problem():
    cfg = small_config(runs=0, ap_antennas=13, scheme="fdma", system={"w1": 0.5, "foo": 1})
    with pytest.raises(ConfigurationError) as err:
        cfg.validate()
    text = "; ".join(err.value.problems)
    for key in ("runs", "ap_antennas", "scheme", "system.foo"):
        assert key in text
    with pytest.raises(ConfigurationError, match="users"):
        small_config(users=1000).validate()
    with pytest.raises(ConfigurationError, match="aps"):
        small_config(aps=7).validate()


def test_schemes_share_a_realization():
    cfg = small_config(scheme="both", runs=2)
    res = run_experiment(cfg)
    assert [(r.run, r.scheme) for r in res.rows] == [(0, "noma"), (0, "oma"), (1, "noma"),
                                                    (1, "oma")]
    assert res.rows[0].seed == res.rows[1].seed != res.rows[2].seed
    again = run_experiment(cfg)
    assert [r.sum_rate for r in again.rows] == [r.sum_rate for r in res.rows]


def test_parallel_matches_serial():
    cfg = small_config(runs=3)
    serial = run_experiment(cfg)
    parallel = run_experiment(small_config(runs=3, workers=2))
    assert [(r.run, r.sum_rate, r.seed) for r in serial.rows] == \
        [(r.run, r.sum_rate, r.seed) for r in parallel.rows]


def test_sweep_rows_and_column(tmp_path):
    cfg = small_config(sweep_axis="p_total", sweep_values=[20.0, 30.0], runs=2)
    res = run_experiment(cfg)
    assert len(res.rows) == 4
    emit_results(res, tmp_path)
    rows = _rows(tmp_path / "results.csv")
    assert tuple(rows[0]) == CSV_HEADER
    assert [r[2] for r in rows[1:]] == ["20", "20", "30", "30"]
    # same users and bodies at every sweep point
    assert rows[1][5] == rows[3][5]


def test_oracle_rows():
    rows = run_single(small_config(oracle="schedule"), None, 0)
    names = [r.scheme for r in rows]
    assert names == ["noma", "mwcs_stage1", "oracle_schedule"]
    assert rows[2].sum_rate >= rows[1].sum_rate


def test_empty_result_writes_header(tmp_path):
    emit_results(RunResult(small_config(), []), tmp_path)
    assert _rows(tmp_path / "results.csv") == [list(CSV_HEADER)]


def test_cli_success_and_metadata_roundtrip(tmp_path, capsys):
    path = _write_config(tmp_path, runs=2, rate_min=0.0)
    assert main(["--config", str(path)]) == EXIT_OK
    out = tmp_path / "out"
    first = (out / "results.csv").read_bytes()
    assert len(_rows(out / "results.csv")) == 3
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["runs"] == 2 and meta["summary"]
    # metadata.json alone reproduces the run
    assert main(["--config", str(out / "metadata.json"), "--out", str(tmp_path / "again")]) \
        == EXIT_OK
    assert (tmp_path / "again" / "results.csv").read_bytes() == first
    json.loads((out / "traces.json").read_text())


def test_cli_overrides(tmp_path):
    path = _write_config(tmp_path, rate_min=0.0)
    assert main(["--config", str(path), "--runs", "2", "--seed", "3", "--scheme", "oma",
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    rows = _rows(tmp_path / "o" / "results.csv")
    assert [r[1] for r in rows[1:]] == ["oma", "oma"]


def test_cli_config_error(tmp_path, capsys):
    path = _write_config(tmp_path, runs=0)
    assert main(["--config", str(path)]) == EXIT_CONFIG
    assert "runs" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == EXIT_CONFIG


def test_cli_all_infeasible(tmp_path):
    path = _write_config(tmp_path, rate_min=50.0)
    assert main(["--config", str(path)]) == EXIT_INFEASIBLE
    rows = _rows(tmp_path / "out" / "results.csv")
    assert [r[4] for r in rows[1:]] == ["0"]
