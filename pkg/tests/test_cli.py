from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from swapsched import demo_instance, save_instance
from conftest import make_valley


def run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "swapsched", *args],
        capture_output=True,
        text=True,
        timeout=120,
    )


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory) -> Path:
    """A demo bundle exported once via the CLI itself."""
    out = tmp_path_factory.mktemp("bundles") / "demo"
    proc = run_cli("demo", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def valley_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("bundles") / "valley"
    save_instance(out, make_valley())
    return out


def test_demo_prints_the_reference_and_the_divergence():
    proc = run_cli("demo")
    assert proc.returncode == 0
    assert "Hours: 1 2 3" in proc.stdout
    assert "B12: O O O O O O E E E E E C C C C C C F F F F F F F" in proc.stdout
    assert "2 lenient violation(s)" in proc.stdout
    assert "differs from the reference in 2 cell(s): B6@15, B6@16" in proc.stdout


def test_demo_export_writes_a_full_bundle(demo_dir):
    for name in ("config.json", "profiles.csv", "initial.json", "schedule.txt"):
        assert (demo_dir / name).exists(), name


def test_validate_demo_reference_fails_leniently(demo_dir):
    proc = run_cli("validate", "--instance", str(demo_dir))
    assert proc.returncode == 1
    assert "infeasible (lenient mode): 2 violation(s)" in proc.stdout
    assert "hour 15" in proc.stdout and "hour 16" in proc.stdout
    assert "charger_capacity" in proc.stdout


def test_validate_strict_mentions_the_long_run(demo_dir):
    proc = run_cli("validate", "--instance", str(demo_dir), "--mode", "strict")
    assert proc.returncode == 1
    assert "charge_duration" in proc.stdout


def test_validate_json_format(demo_dir):
    proc = run_cli("validate", "--instance", str(demo_dir), "--format", "json")
    assert proc.returncode == 1
    data = json.loads(proc.stdout)
    assert data["feasible"] is False
    assert len(data["violations"]) == 2


def test_solve_greedy_then_validate_clean(demo_dir, tmp_path):
    out = tmp_path / "greedy"
    proc = run_cli("solve", "--instance", str(demo_dir), "--method", "greedy", "--out", str(out))
    assert proc.returncode == 0
    assert "total cost: 4150/3" in proc.stdout
    check = run_cli(
        "validate",
        "--instance", str(demo_dir),
        "--schedule", str(out / "schedule.txt"),
        "--mode", "strict",
    )
    assert check.returncode == 0, check.stdout + check.stderr
    assert "feasible (strict mode)" in check.stdout


def test_solve_exact_on_the_valley(valley_dir, tmp_path):
    out = tmp_path / "exact"
    proc = run_cli("solve", "--instance", str(valley_dir), "--method", "exact", "--out", str(out))
    assert proc.returncode == 0
    assert "B1: E E C C F O" in proc.stdout
    assert "total cost: 20" in proc.stdout
    cost = json.loads((out / "cost.json").read_text())
    assert cost["total"] == 20.0
    assert (out / "schedule.txt").read_text().splitlines()[1] == "B1: E E C C F O"


def test_solve_oracle_agrees_on_the_valley(valley_dir):
    proc = run_cli("solve", "--instance", str(valley_dir), "--method", "oracle", "--format", "json")
    assert proc.returncode == 0
    data = json.loads(proc.stdout)
    assert data["total_cost"] == "20"
    assert "E E C C F O" in data["schedule"]


def test_solve_oracle_budget_exit_code(demo_dir):
    proc = run_cli("solve", "--instance", str(demo_dir), "--method", "oracle", "--budget", "100")
    assert proc.returncode == 3
    assert "exceeding the budget" in proc.stderr


def test_solve_infeasible_exit_code(tmp_path):
    bundle = tmp_path / "impossible"
    instance, _ = demo_instance()
    # demand at hour 2 is fine, but demanding six swaps then is not
    events = instance.events
    demand = list(events.demand)
    demand[1] = 6
    from swapsched import EventProfiles, Instance

    broken = Instance(
        instance.config,
        instance.initial,
        EventProfiles(tuple(demand), events.arrivals, events.price),
    )
    save_instance(bundle, broken)
    proc = run_cli("solve", "--instance", str(bundle), "--method", "greedy")
    assert proc.returncode == 1
    assert "infeasible at hour 2" in proc.stderr


def test_generate_is_reproducible_end_to_end(tmp_path):
    spec = {
        "config": {
            "n_batteries": 3,
            "n_chargers": 2,
            "charge_hours": 3,
            "capacity_kwh": 30,
            "horizon": 14,
        },
        "seed": 21,
        "demand": {"shape": "uniform", "total": 4},
        "arrivals": {"shape": "uniform", "total": 3},
        "tariff": {"kind": "flat", "price": "0.25"},
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        proc = run_cli("generate", "--spec", str(spec_path), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert "wrote instance bundle" in proc.stdout
    for name in ("config.json", "profiles.csv", "initial.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    solved = run_cli("solve", "--instance", str(a), "--method", "exact")
    assert solved.returncode == 0


def test_generate_rejects_bad_specs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1}))
    proc = run_cli("generate", "--spec", str(bad), "--out", str(tmp_path / "x"))
    assert proc.returncode == 2
    assert "missing" in proc.stderr
    proc = run_cli("generate", "--spec", str(tmp_path / "nothing.json"), "--out", str(tmp_path / "y"))
    assert proc.returncode == 2


def test_render_with_counts(demo_dir):
    proc = run_cli("render", "--instance", str(demo_dir), "--counts")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0].startswith("Hours:")
    tail = lines[-4:]
    assert [line[0] for line in tail] == ["E", "C", "F", "O"]
    # the counts partition the fleet hour by hour
    columns = [list(map(int, line[3:].split())) for line in tail]
    for t in range(24):
        assert sum(col[t] for col in columns) == 12
    assert columns[1][14] == 5  # the hour-15 charger overrun is visible here


def test_corrupt_schedule_is_an_input_error(demo_dir, tmp_path):
    mangled = tmp_path / "mangled.txt"
    text = (demo_dir / "schedule.txt").read_text().replace(" F F O", " F X O", 1)
    mangled.write_text(text)
    proc = run_cli("validate", "--instance", str(demo_dir), "--schedule", str(mangled))
    assert proc.returncode == 2
    assert "line" in proc.stderr and "column" in proc.stderr


def test_missing_instance_dir_is_an_input_error(tmp_path):
    proc = run_cli("validate", "--instance", str(tmp_path / "void"))
    assert proc.returncode == 2


def test_missing_schedule_is_an_input_error(tmp_path, valley_dir):
    proc = run_cli("validate", "--instance", str(valley_dir))
    assert proc.returncode == 2
    assert "schedule" in proc.stderr
