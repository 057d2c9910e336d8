import copy
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from npcflow.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main
from npcflow.config import ConfigError, load_config, validate_config
from npcflow.export import (atomic_write_text, read_csv, read_json, record_to_csv,
                            trajectory_columns)
from npcflow.presets import PRESETS, preset_configs
from npcflow.runner import OUTPUT_ENV, run, suite
from npcflow.spaces import Euclidean, Spider

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SCALAR = {
    "schema_version": 1, "name": "scalar", "seed": 0,
    "space": {"kind": "euclidean", "dim": 1},
    "functional": {"kind": "quadratic", "A": [[1.0]], "b": [0.0]},
    "initial": [1.0],
    "flow": {"T": 1.0, "n_per_unit": 64},
    "checks": [{"name": "closed_form_point", "t": 1.0, "n": 64,
                "expected": [(1 + 1 / 64) ** -64]},
               {"name": "consistency", "n_list": [16, 32, 64],
                "expected_errors": [1.13e-2, 5.7e-3, 2.9e-3]},
               "speed_slope"],
}


def _doc(**changes):
    d = copy.deepcopy(SCALAR)
    d.update(changes)
    return d


def _write(tmp_path, doc, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


# -- validation ----------------------------------------------------------------------

def test_valid_config_parses():
    cfg = validate_config(_doc())
    assert cfg.tau == 1 / 64 and cfg.name == "scalar"
    assert [c.name for c in cfg.checks] == ["closed_form_point", "consistency", "speed_slope"]


@pytest.mark.parametrize("change,path", [
    ({"colour": "red"}, "colour"),
    ({"flow": {"T": 1.0, "speed": 2}}, "flow.speed"),
    ({"checks": [{"name": "evi", "triplets": 3}]}, "checks[0].triplets"),
    ({"space": {"kind": "euclidean", "dim": 1, "metric": "l1"}}, "space"),
    ({"functional": {"kind": "quadratic", "A": [[1.0]], "b": [0.0], "c": 1}}, "functional"),
])
def test_unknown_keys_rejected(change, path):
    with pytest.raises(ConfigError) as exc:
        validate_config(_doc(**change))
    assert path in [e["path"] for e in exc.value.errors]


@pytest.mark.parametrize("tau", [0.0, -0.5, "x"])
def test_nonpositive_tau_rejected(tau):
    with pytest.raises(ConfigError) as exc:
        validate_config(_doc(flow={"tau": tau}))
    assert exc.value.errors[0]["path"] == "flow.tau"


@pytest.mark.parametrize("change", [
    {"schema_version": 2}, {"seed": -1}, {"seed": None}, {"name": "../x"},
    {"checks": ["no_such_check"]}, {"flow": {"n_per_unit": 0}},
    {"flow": {"tau": 0.3}}, {"initial": [1.0, 2.0]},
    {"checks": [{"name": "projection_lipschitz"}]},
])
def test_invalid_configs_rejected(change):
    with pytest.raises(ConfigError):
        validate_config(_doc(**change))


def test_all_errors_reported_together():
    with pytest.raises(ConfigError) as exc:
        validate_config(_doc(schema_version=3, colour="red", flow={"tau": -1}))
    assert len(exc.value.errors) >= 3
    assert exc.value.to_dict()["error"] == "config"


def test_tau_sets_steps_per_unit():
    assert validate_config(_doc(flow={"tau": 0.125})).flow["n_per_unit"] == 8


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("a: [1, 2")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("name", PRESETS)
def test_presets_validate(name):
    docs = preset_configs(name)
    assert docs
    for d in docs:
        validate_config(d)
    assert len({d["name"] for d in docs}) == len(docs)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_load_or_fail_cleanly(path):
    if path.stem.startswith("bad"):
        with pytest.raises(ConfigError):
            load_config(path)
    else:
        load_config(path)


# -- runs and artifacts -------------------------------------------------------------

def test_empty_checks_pass(tmp_path):
    m = run(validate_config(_doc(checks=[])), output_root=tmp_path)
    assert m.passed and m.reports == []
    assert (Path(m.run_dir) / "manifest.json").is_file()


def test_scalar_manifest(tmp_path):
    m = run(validate_config(_doc()), output_root=tmp_path)
    assert m.passed
    man = read_json(Path(m.run_dir) / "manifest.json")
    assert man["status"] == "pass" and man["schema_version"] == 1
    names = [r["name"] for r in man["reports"]]
    assert any(n.startswith("consistency") for n in names)
    assert set(man["artifacts"]) >= {"manifest.json", "reports.json", "trajectory.csv"}


def test_failing_check_gives_fail_status(tmp_path):
    doc = _doc(checks=[{"name": "closed_form_point", "t": 1.0, "n": 64, "expected": [0.370127]}])
    m = run(validate_config(doc), output_root=tmp_path)
    assert not m.passed


def _strip_timings(path):
    man = read_json(path)
    man.pop("timings")
    return man


def test_runs_are_deterministic(tmp_path):
    doc = _doc(checks=SCALAR["checks"] + [{"name": "evi", "triples": 30}])
    a = run(validate_config(doc), output_root=tmp_path / "a")
    b = run(validate_config(doc), output_root=tmp_path / "b")
    for f in ("trajectory.csv", "trajectory.json", "reports.json"):
        assert (Path(a.run_dir) / f).read_bytes() == (Path(b.run_dir) / f).read_bytes()
    assert _strip_timings(Path(a.run_dir) / "manifest.json") == \
        _strip_timings(Path(b.run_dir) / "manifest.json")


def test_seed_changes_random_checks(tmp_path):
    checks = [{"name": "evi", "triples": 30}]
    a = run(validate_config(_doc(checks=checks)), output_root=tmp_path / "a")
    b = run(validate_config(_doc(checks=checks, seed=7)), output_root=tmp_path / "b")
    assert (Path(a.run_dir) / "reports.json").read_bytes() != \
        (Path(b.run_dir) / "reports.json").read_bytes()


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "file.txt"
    atomic_write_text(target, "one")
    atomic_write_text(target, "two")
    assert target.read_text() == "two"
    assert [p.name for p in target.parent.iterdir()] == ["file.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "file.txt"
    atomic_write_text(target, "old")

    class Boom:
        def __str__(self):
            raise RuntimeError

    with pytest.raises(TypeError):
        atomic_write_text(target, Boom())
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["file.txt"]


def test_csv_round_trip_is_exact(tmp_path):
    m = run(validate_config(_doc(checks=["speed_slope"])), output_root=tmp_path)
    header, data = read_csv(Path(m.run_dir) / "trajectory.csv")
    assert header == trajectory_columns(Euclidean(1))
    record = read_json(Path(m.run_dir) / "trajectory.json")
    np.testing.assert_array_equal(data, np.array(record["rows"], dtype=float))
    assert abs(data[64, 1] - (1 + 1 / 64) ** -64) <= 1e-12
    text = (Path(m.run_dir) / "trajectory.csv").read_text().splitlines()
    assert text[0] == "t,x0,value,slope,step_distance"


def test_csv_columns_for_spider():
    assert trajectory_columns(Spider(3)) == ["t", "leg", "radius", "value", "slope",
                                             "step_distance"]


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "envroot"))
    m = run(validate_config(_doc(checks=[])))
    assert Path(m.run_dir) == tmp_path / "envroot" / "scalar"


def test_output_dir_in_config_wins(tmp_path):
    m = run(validate_config(_doc(checks=[], output_dir=str(tmp_path / "here"))),
            output_root=tmp_path / "elsewhere")
    assert Path(m.run_dir) == tmp_path / "here"


def test_suite_parallel_matches_serial(tmp_path):
    a = suite("convergence", output_root=tmp_path / "a", jobs=1)
    b = suite("convergence", output_root=tmp_path / "b", jobs=2)
    assert [m.status for m in a] == [m.status for m in b]
    for ma, mb in zip(a, b):
        assert (Path(ma.run_dir) / "reports.json").read_bytes() == \
            (Path(mb.run_dir) / "reports.json").read_bytes()


# -- CLI ----------------------------------------------------------------------------

def test_cli_check_pass(tmp_path):
    code, out, _ = _cli("check", _write(tmp_path, _doc()), "--output", str(tmp_path / "o"))
    assert code == EXIT_PASS and out.startswith("PASS scalar")


def test_cli_check_failure_exit_1(tmp_path):
    doc = _doc(checks=[{"name": "closed_form_point", "t": 1.0, "n": 64, "expected": [0.5]}])
    code, out, _ = _cli("check", _write(tmp_path, doc), "--output", str(tmp_path / "o"))
    assert code == EXIT_FAIL and out.startswith("FAIL")


def test_cli_config_error_exit_2(tmp_path):
    code, out, err = _cli("check", _write(tmp_path, _doc(flow={"tau": -0.5})))
    assert code == EXIT_CONFIG
    payload = json.loads(err)
    assert payload["error"] == "config" and payload["errors"][0]["path"] == "flow.tau"


def test_cli_shipped_bad_config():
    code, _, err = _cli("check", str(CONFIGS / "bad-tau.yaml"))
    assert code == EXIT_CONFIG and "tau" in err


def test_cli_certify(tmp_path):
    code, out, _ = _cli("certify", _write(tmp_path, _doc()), "--output", str(tmp_path / "o"))
    assert code == EXIT_PASS
    man = read_json(tmp_path / "o" / "scalar" / "manifest.json")
    assert [r["name"].split("[")[0] for r in man["reports"]] == ["npc_certify", "convexity"]
    assert "trajectory.csv" not in man["artifacts"]


def test_cli_flow_writes_trajectory(tmp_path):
    code, _, _ = _cli("flow", _write(tmp_path, _doc()), "--output", str(tmp_path / "o"))
    assert code == EXIT_PASS
    assert (tmp_path / "o" / "scalar" / "trajectory.csv").is_file()


def test_cli_flow_needs_functional(tmp_path):
    doc = _doc(checks=[])
    del doc["functional"]
    code, _, err = _cli("flow", _write(tmp_path, doc))
    assert code == EXIT_CONFIG and "functional" in err


def test_cli_export_csv_and_json(tmp_path):
    _cli("flow", _write(tmp_path, _doc()), "--output", str(tmp_path / "o"))
    run_dir = tmp_path / "o" / "scalar"
    code, out, _ = _cli("export", str(run_dir), "--format", "csv")
    assert code == EXIT_PASS
    assert out == (run_dir / "trajectory.csv").read_text()
    assert out == record_to_csv(read_json(run_dir / "trajectory.json"))
    code, out, _ = _cli("export", str(run_dir), "--format", "json")
    doc = json.loads(out)
    assert doc["manifest"]["name"] == "scalar" and doc["trajectory"]["columns"][0] == "t"
    target = tmp_path / "exported.csv"
    code, out, _ = _cli("export", str(run_dir), "--format", "csv", "--output", str(target))
    assert out == "" and target.read_text() == (run_dir / "trajectory.csv").read_text()


def test_cli_export_missing_run(tmp_path):
    code, _, err = _cli("export", str(tmp_path / "nothing"), "--format", "json")
    assert code == EXIT_CONFIG and "manifest" in err


def test_cli_export_without_trajectory(tmp_path):
    _cli("certify", _write(tmp_path, _doc()), "--output", str(tmp_path / "o"))
    code, _, err = _cli("export", str(tmp_path / "o" / "scalar"), "--format", "csv")
    assert code == EXIT_CONFIG and "trajectory" in err


def test_cli_unknown_preset():
    code, _, err = _cli("suite", "everything")
    assert code == EXIT_CONFIG
    assert json.loads(err)["available"] == list(PRESETS)


def test_cli_bad_jobs():
    assert _cli("suite", "convergence", "--jobs", "0")[0] == EXIT_CONFIG


def test_cli_suite_uses_environment_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    code, out, _ = _cli("suite", "convergence")
    assert code == EXIT_PASS and "5/5 runs passed" in out
    assert (tmp_path / "env" / "suite-convergence" / "conv-quadratic" / "manifest.json").is_file()


def test_cli_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["export", "somewhere"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    env = dict(os.environ, **{OUTPUT_ENV: str(tmp_path / "m")})
    proc = subprocess.run([sys.executable, "-m", "npcflow", "check",
                           str(CONFIGS / "scalar-anchor.yaml")],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "m" / "scalar-anchor" / "manifest.json").is_file()
