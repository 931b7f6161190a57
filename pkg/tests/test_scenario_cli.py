import csv
import json

import numpy as np
import pytest

from stlddp.cli import main
from stlddp.errors import ConfigError, LengthMismatch, ParseError, SoundnessViolation
from stlddp.runner import (OUT_ENV, RunReport, lqr_cells, monitor, read_signal_csv,
                           run_benchmark_suite, run_scenario)
from stlddp.scenario import bundled_scenarios, initial_controls, load_scenario


def small_scenario(**overrides):
    raw = {
        "name": "small",
        "model": {"name": "single_integrator", "dt": 0.1},
        "predicates": {
            "obstacle": {"kind": "box", "lower": [1.0, 1.0], "upper": [2.0, 2.0]},
            "goal": {"kind": "box", "lower": [2.5, 2.5], "upper": [3.5, 3.5]},
        },
        "specification": "G[0,20] (not obstacle) & F[0,20] goal",
        "horizon": 20,
        "x0": [0.0, 0.0],
        "solver": {"max_iterations": 200, "control_weight": 0.05},
        "init": {"policy": "random_uniform", "seed": 0},
    }
    raw.update(overrides)
    return raw


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small_scenario()))
    return path


# -- loading ---------------------------------------------------------------------

def test_bundled_scenarios_load():
    names = bundled_scenarios()
    assert {"reach_avoid", "either_or", "arm_reach"} <= set(names)
    for path in names.values():
        sc = load_scenario(path)
        assert sc.table().horizon == sc.horizon


@pytest.mark.parametrize("change, path", [
    ({"colour": "red"}, "colour"),
    ({"model": {"name": "unicycle", "dt": 0.1}}, "model.name"),
    ({"horizon": 0}, "horizon"),
    ({"horizon": 10}, "horizon"),
    ({"specification": "G[0,20] (not obstacle"}, "specification"),
    ({"specification": "F[0,20] nowhere"}, "specification"),
    ({"x0": [0.0]}, "x0"),
    ({"x0_alternatives": [[0.0, "a"]]}, "x0_alternatives.0"),
    ({"solver": {"max_iter": 5}}, "solver.max_iter"),
    ({"init": {"policy": "guess"}}, "init.policy"),
    ({"init": {"policy": "gravity_compensation"}}, "init.policy"),
    ({"retry": {"budget": -1}}, "retry"),
    ({"switching_times": {"1": 30}}, "switching_times"),
])
def test_config_errors_locate_the_entry(change, path):
    with pytest.raises(ConfigError) as info:
        load_scenario(small_scenario(**change))
    assert info.value.path == path


def test_missing_key_and_bad_json(tmp_path):
    raw = small_scenario()
    del raw["x0"]
    with pytest.raises(ConfigError) as info:
        load_scenario(raw)
    assert info.value.path == "x0"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(bad)


def test_predicate_dimension_must_match_output():
    raw = small_scenario(predicates={"goal": {"kind": "box", "lower": [0, 0, 0],
                                              "upper": [1, 1, 1]},
                                     "obstacle": {"kind": "box", "lower": [1, 1],
                                                  "upper": [2, 2]}})
    with pytest.raises(ConfigError) as info:
        load_scenario(raw)
    assert info.value.path.startswith("predicates")


def test_init_policies():
    sc = load_scenario(small_scenario())
    U = initial_controls(sc)
    assert U.shape == (21, 2) and np.all(np.abs(U) <= 1)
    np.testing.assert_array_equal(U, initial_controls(sc))
    assert not np.array_equal(U, initial_controls(sc, seed=1))
    zeros = load_scenario(small_scenario(init={"policy": "zeros"}))
    assert np.all(initial_controls(zeros) == 0)
    arm = load_scenario(bundled_scenarios()["arm_reach"])
    tau = initial_controls(arm)
    np.testing.assert_allclose(tau[0], arm.model.gravity_torque(arm.x0[:3]))


def test_overrides():
    sc = load_scenario(small_scenario()).with_overrides(seed=5, k1=20, k2=30, max_iterations=7,
                                                         retries=0)
    assert sc.init.seed == 5 and sc.params.k1 == 20 and sc.params.k2 == 30
    assert sc.solver.max_iterations == 7 and sc.retry.budget == 0


# -- running ---------------------------------------------------------------------

def test_run_writes_artifacts(tmp_path, scenario_file):
    outcome = run_scenario(scenario_file, tmp_path / "out")
    r = outcome.report
    assert r.verdict == "Satisfied" and r.exact_robustness > 0
    assert set(outcome.paths) == {"trajectory", "report", "plot", "diagnostics"}
    report = json.loads(outcome.paths["report"].read_text())
    assert report["verdict"] == "Satisfied" and len(report["margins"]) == 21
    assert report["offending_timesteps"] == []
    with open(outcome.paths["trajectory"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x_0", "x_1", "u_0", "u_1", "y_0", "y_1", "margin"]
    assert len(rows) == 22
    plot = outcome.paths["plot"].read_text().splitlines()
    assert any(line.startswith("box_lower,goal") for line in plot)
    assert b"\r\n" not in outcome.paths["trajectory"].read_bytes()


def test_runs_are_byte_reproducible(tmp_path, scenario_file):
    a = run_scenario(scenario_file, tmp_path / "a").paths["trajectory"].read_bytes()
    b = run_scenario(scenario_file, tmp_path / "b").paths["trajectory"].read_bytes()
    assert a == b


def test_file_init_round_trip(tmp_path, scenario_file):
    first = run_scenario(scenario_file, tmp_path / "a")
    raw = small_scenario(init={"policy": "file", "path": str(first.paths["trajectory"])})
    second = run_scenario(load_scenario(raw), tmp_path / "b")
    assert second.report.iterations <= 2
    assert second.report.verdict == "Satisfied"


def test_report_refuses_unsound_claim():
    report = RunReport("x", "Satisfied", -0.1, "violated", [], [], 1, 1, 0, 1.0, [], "ddp",
                       10, 10, 0, "max_iterations", False, 0, [0, 0], {})
    with pytest.raises(SoundnessViolation):
        report.to_dict()


def test_cli_run_exit_codes(tmp_path, scenario_file, capsys, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env-out"))
    assert main(["run", str(scenario_file)]) == 0
    assert (tmp_path / "env-out" / "small.report.json").exists()
    assert "Satisfied" in capsys.readouterr().out
    # one iteration from a random start cannot reach the goal
    assert main(["run", str(scenario_file), "--max-iters", "1", "--retries", "0",
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_reports_config_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(small_scenario(horizon=-3)))
    assert main(["run", str(path), "--out", str(tmp_path)]) == 1
    assert "ConfigError" in capsys.readouterr().err


# -- monitoring ------------------------------------------------------------------

def _spec_file(tmp_path, text, horizon=None):
    raw = {"predicates": {"a": {"kind": "affine", "a": [1.0], "b": 0.0}}, "specification": text}
    if horizon is not None:
        raw["horizon"] = horizon
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(raw))
    return path


def _signal(tmp_path, values, header=True):
    path = tmp_path / "signal.csv"
    lines = (["y_0"] if header else []) + [repr(float(v)) for v in values]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_monitor_examples(tmp_path):
    spec = _spec_file(tmp_path, "G[0,2] a")
    res = monitor(_signal(tmp_path, [0.5, 0.2, 0.4]), spec)
    assert res.exact_robustness == pytest.approx(0.2) and res.verdict == "satisfied"
    assert res.certified
    res = monitor(_signal(tmp_path, [0.5, -0.2, 0.4]), spec)
    assert res.exact_robustness == pytest.approx(-0.2) and res.verdict == "violated"
    res = monitor(_signal(tmp_path, [0.5, 0.0, 0.4]), spec)
    assert res.exact_robustness == 0.0 and res.verdict == "undefined"
    assert not res.certified


def test_monitor_horizon_from_file(tmp_path):
    spec = _spec_file(tmp_path, "F[0,3] a", horizon=3)
    with pytest.raises(LengthMismatch):
        monitor(_signal(tmp_path, [1.0, 2.0]), spec)


def test_signal_parse_error_row(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("y\n1.0\n2.0\nabc\n")
    with pytest.raises(ParseError) as info:
        read_signal_csv(path, 1)
    assert info.value.row == 4
    path.write_text("1.0,2.0\n")
    with pytest.raises(ParseError) as info:
        read_signal_csv(path, 1)
    assert info.value.row == 1


def test_cli_monitor(tmp_path, capsys):
    spec = _spec_file(tmp_path, "G[0,2] a")
    assert main(["monitor", str(_signal(tmp_path, [1, 2, 3])), "--spec", str(spec), "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["exact_robustness"] == 1.0
    assert main(["monitor", str(_signal(tmp_path, [1, -2, 3])), "--spec", str(spec)]) == 2


# -- benchmark -------------------------------------------------------------------

def test_lqr_cells_succeed():
    cells = {c.solver: c for c in lqr_cells()}
    assert cells["ddp"].satisfied and cells["first_order"].satisfied
    assert cells["ddp"].iterations <= 3


def test_small_bench(tmp_path, scenario_file):
    rows = run_benchmark_suite(tmp_path, seeds=range(2), scenarios=[str(scenario_file)])
    by_key = {(r.scenario, r.solver): r for r in rows}
    assert by_key[("small", "ddp")].runs == 2
    assert by_key[("small", "ddp")].successes == 2
    assert ("lqr", "ddp") in by_key and by_key[("lqr", "ddp")].successes == 1
    for name in ("bench_cells.csv", "bench_summary.csv", "bench_summary.json"):
        assert (tmp_path / name).exists()
