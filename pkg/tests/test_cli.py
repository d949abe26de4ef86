from __future__ import annotations

import json

import pytest

from mtdgrid.cli import main
from mtdgrid.grid import fixture_dir


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_analyze_table1_plan(capsys):
    code, out = _run(capsys, "analyze", "bus4_fig1", "--plan", str(fixture_dir() / "plans" / "tab1_row1.json"))
    assert code == 0
    assert out["space"]["dim_stealthy"] == 1
    assert out["manifest"]["command"] == "analyze"


def test_complete_check(capsys):
    code, out = _run(capsys, "complete-check", "--case", "bus4_fig3", "--plan", "plans/complete.json")
    assert code == 0
    assert out["completeness"]["complete"] is True


def test_analyze_without_plan(capsys):
    code, out = _run(capsys, "analyze", "ieee14")
    assert code == 0
    assert out["space"]["dim_stealthy"] == 13


def test_plan_budget(capsys, tmp_path):
    code, _ = _run(capsys, "plan", "ieee14", "--budget", "10", "--seed", "0", "--out", str(tmp_path))
    assert code == 0
    result = json.loads((tmp_path / "planner_result.json").read_text())
    assert result["dim_stealthy"] == 6
    assert result["n_covered"] == 13
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 0
    assert (tmp_path / "plan.json").exists()


def test_plan_budget_zero(capsys):
    code, out = _run(capsys, "plan", "ieee14", "--budget", "0")
    assert code == 0
    assert out["selected"] == []


def test_plan_negative_budget(capsys):
    assert main(["plan", "ieee14", "--budget", "-1"]) == 2


def test_missing_case():
    assert main(["analyze", "no_such_case"]) == 1


def test_bad_plan_json(tmp_path):
    bad = tmp_path / "plan.json"
    bad.write_text("{not json")
    assert main(["analyze", "bus4_fig1", "--plan", str(bad)]) == 2


def test_simulate_preset(capsys, tmp_path):
    code, _ = _run(capsys, "simulate", "--preset", "tab1", "--out", str(tmp_path))
    assert code == 0
    assert {"tab1.json", "tab1.csv", "manifest.json"} <= {p.name for p in tmp_path.iterdir()}


def test_simulate_scenario_smoke(capsys, tmp_path):
    code, out = _run(capsys, "simulate", "--scenario", str(fixture_dir() / "scenario_bus8.json"), "--trials", "1")
    assert code == 0
    assert out["detection_probability"] in (0.0, 1.0)


def test_simulate_needs_input():
    assert main(["simulate"]) == 2


def test_opf_table4_baseline(capsys):
    code, out = _run(capsys, "opf", "ieee30", "--generators", "gens_ieee30_cost")
    assert code == 0
    assert out["total_cost"] == pytest.approx(3784, rel=0.01)


def test_opf_load_scale(capsys):
    code, out = _run(capsys, "opf", "ieee30", "--generators", "gens_ieee30_cost", "--scale-load", "26:2.0")
    assert code == 0
    assert out["total_cost"] == pytest.approx(3854, rel=0.01)


def test_opf_infeasible(capsys):
    code, out = _run(capsys, "opf", "ieee30", "--generators", "gens_ieee30_cost", "--scale-load", "8:30")
    assert code == 3
    assert out["status"] == "infeasible"


def test_opf_sweep_csv(capsys, tmp_path):
    code, _ = _run(capsys, "opf", "ieee14", "--generators", "gens_ieee14_cost", "--sweep", "2:0.8:1.2:5", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "opf_sweep.csv").read_text().splitlines()
    assert lines[0] == "x,cost"
    assert len(lines) == 6


def test_opf_bad_sweep():
    assert main(["opf", "ieee14", "--generators", "gens_ieee14_cost", "--sweep", "2:0.8"]) == 2
