import json
from pathlib import Path

import pytest

from devlab import cli

ADJ_EXPERIMENT = {
    "label": "honest-baseline",
    "goal": {"id": "adjacent_ones", "mu": 0.1},
    "horizon": 400,
    "trials": 2000,
    "seed": 42,
    "blame": {"id": "adjacent_ones_threshold", "variant": "full"},
}


def _write(tmp_path: Path, name: str, payload: dict) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_simulate_writes_deterministic_outputs(tmp_path):
    config = _write(tmp_path, "adj.json", ADJ_EXPERIMENT)
    outs = []
    for run, threads in (("a", "1"), ("b", "4")):
        out = tmp_path / run
        code = cli.main(
            ["simulate", "--config", config, "--threads", threads, "--out", str(out)]
        )
        assert code == 0
        outs.append(
            ((out / "reports.jsonl").read_bytes(), (out / "summary.csv").read_bytes())
        )
    assert outs[0] == outs[1]
    row = json.loads(outs[0][0].splitlines()[0])
    assert row["schema_version"] == 1
    assert row["config"]["label"] == "honest-baseline"
    header = outs[0][1].splitlines()[0].decode()
    assert header == ",".join(cli.CSV_HEADERS)


def test_simulate_experiment_list_and_overrides(tmp_path):
    config = _write(
        tmp_path,
        "multi.json",
        {"experiments": [ADJ_EXPERIMENT, {**ADJ_EXPERIMENT, "label": "second"}]},
    )
    out = tmp_path / "out"
    code = cli.main(
        ["simulate", "--config", config, "--seed", "7", "--trials", "500", "--out", str(out)]
    )
    assert code == 0
    rows = [json.loads(line) for line in (out / "reports.jsonl").read_text().splitlines()]
    assert len(rows) == 2
    assert all(r["config"]["seed"] == 7 and r["config"]["trials"] == 500 for r in rows)


def test_simulate_config_errors(tmp_path, capsys):
    config = _write(tmp_path, "bad.json", {**ADJ_EXPERIMENT, "goal": {"mu": 0.1}})
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "x")]) == 2
    assert "goal.id" in capsys.readouterr().err

    config = _write(tmp_path, "zero.json", {**ADJ_EXPERIMENT, "trials": 0})
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "y")]) == 2

    config = _write(tmp_path, "walk.json", {
        "goal": {"id": "random_walk"},
        "horizon": 200, "trials": 10, "seed": 1,
        "blame": {"id": "random_walk_steps"},
    })
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "z")]) == 2
    assert "thresholds" in capsys.readouterr().err


def test_simulate_missing_config_file(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


ENUM_CONFIG = {
    "goal": {"id": "adjacent_ones", "mu": 0.2},
    "horizon": 8,
    "hypothesis": [
        {"player": 0, "kind": "always", "action": 1},
        {"player": 1, "kind": "always", "action": 1},
    ],
}


def test_enumerate_passes_and_writes_report(tmp_path):
    config = _write(tmp_path, "enum.json", ENUM_CONFIG)
    out = tmp_path / "out"
    assert cli.main(["enumerate", "--config", config, "--out", str(out)]) == 0
    report = json.loads((out / "verify_report.json").read_text())
    assert report["passed"] is True
    assert report["num_rejecting_prefixes"] == 40


def test_enumerate_budget_exit(tmp_path):
    config = _write(tmp_path, "enum40.json", {**ENUM_CONFIG, "horizon": 40})
    assert cli.main(["enumerate", "--config", config, "--out", str(tmp_path / "o")]) == 3


def test_enumerate_single_bit_fixture(tmp_path):
    config = _write(
        tmp_path,
        "bit.json",
        {
            "goal": {"id": "single_bit", "mu": 0.1},
            "horizon": 1,
            "hypothesis": [
                {"player": 0, "kind": "always", "action": 1},
                {"player": 1, "kind": "always", "action": 1},
            ],
        },
    )
    out = tmp_path / "out"
    assert cli.main(["enumerate", "--config", config, "--out", str(out)]) == 0
    report = json.loads((out / "verify_report.json").read_text())
    assert report["eps_n"] == pytest.approx(0.01, rel=1e-12)


def test_enumerate_assertion_failure_exit(tmp_path):
    # an impossible tolerance turns every check red: exercises exit code 1
    config = _write(tmp_path, "enum_tol.json", {**ENUM_CONFIG, "tolerance": -1.0})
    assert cli.main(["enumerate", "--config", config, "--out", str(tmp_path / "o")]) == 1


CAL_CONFIG = {
    "goal": {"id": "random_walk", "start": 10},
    "horizon": 2000,
    "trials": 3000,
    "seed": 5,
    "alpha": 0.05,
    "n0": 100,
}


def test_calibrate_roundtrip_into_simulate(tmp_path):
    config = _write(tmp_path, "cal.json", CAL_CONFIG)
    out = tmp_path / "cal-out"
    assert cli.main(["calibrate", "--config", config, "--out", str(out)]) == 0
    fragment = json.loads((out / "thresholds.json").read_text())
    assert set(fragment["thresholds"]) == {"theta1", "theta2", "theta3", "n0"}

    sim = {
        "goal": {"id": "random_walk", "start": 10},
        "horizon": 2000,
        "trials": 1000,
        "seed": 6,
        "blame": {"id": "random_walk_steps", "thresholds": fragment["thresholds"]},
    }
    sim_config = _write(tmp_path, "sim.json", sim)
    assert cli.main(["simulate", "--config", sim_config, "--out", str(tmp_path / "s")]) == 0
    rows = (tmp_path / "s" / "reports.jsonl").read_text().splitlines()
    echoed = json.loads(rows[0])["config"]["blame"]["thresholds"]
    assert echoed == fragment["thresholds"]


def test_calibrate_identical_seed_identical_fragment(tmp_path):
    config = _write(tmp_path, "cal.json", CAL_CONFIG)
    blobs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert cli.main(["calibrate", "--config", config, "--out", str(out)]) == 0
        blobs.append((out / "thresholds.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_calibrate_alpha_validation(tmp_path):
    config = _write(tmp_path, "cal.json", {**CAL_CONFIG, "alpha": 0.7})
    assert cli.main(["calibrate", "--config", config, "--out", str(tmp_path / "o")]) == 2


def test_calibrate_too_few_conditioned_is_resource_error(tmp_path):
    config = _write(tmp_path, "cal.json", {**CAL_CONFIG, "horizon": 10000, "trials": 200})
    assert cli.main(["calibrate", "--config", config, "--out", str(tmp_path / "o")]) == 3


def test_threads_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("DEVLAB_THREADS", "2")
    config = _write(tmp_path, "adj.json", {**ADJ_EXPERIMENT, "trials": 200})
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "o")]) == 0
    monkeypatch.setenv("DEVLAB_THREADS", "bogus")
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "p")]) == 2
