import json
from pathlib import Path

import pytest
import yaml

from latticeclock.cli import main
from latticeclock.scenarios import builtin_config_path


def run(args):
    return main([str(a) for a in args])


def data_files(outdir: Path):
    """Data artifacts, excluding the timestamped manifest."""
    return sorted(p for p in outdir.iterdir() if p.name != "manifest.json")


def test_prep_command(tmp_path):
    out = tmp_path / "prep"
    assert run(["prep", "--scenario", "sr-breadboard", "--out", out]) == 0
    stages = (out / "stages.csv").read_text().splitlines()
    assert stages[0].startswith("# scenario=sr-breadboard seed=")
    assert stages[1] == "stage,duration_s,atom_number,temperature_k"
    rows = {line.split(",")[0]: line.split(",") for line in stages[2:]}
    assert float(rows["mot1"][2]) == 1e8
    assert float(rows["mot2_single"][2]) == 1e6
    assert float(rows["lattice"][2]) == pytest.approx(4.56e5, rel=1e-2)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"]["name"] == "sr-breadboard"
    assert "created" in manifest


def test_scan_command(tmp_path):
    out = tmp_path / "scan"
    assert run(["scan", "--scenario", "sr-breadboard", "--out", out]) == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[1] == "detuning_hz,excitation_fraction"
    assert len(lines) == 2 + 1801


def test_lock_then_allan_roundtrip(tmp_path):
    out = tmp_path / "lock"
    assert run(["lock", "--scenario", "sr-breadboard", "--out", out,
                "--seed", "99"]) == 0
    for name in ("locked_trace.csv", "locked_trace.json", "free_trace.csv",
                 "lock_records.csv"):
        assert (out / name).exists()
    allan_out = tmp_path / "allan"
    assert run(["allan", "--input", out / "locked_trace.csv", "--out",
                allan_out]) == 0
    lines = (allan_out / "stability.csv").read_text().splitlines()
    assert lines[1] == "tau_s,sigma_y,count"
    assert len(lines) > 4


def test_allan_explicit_taus(tmp_path):
    out = tmp_path / "lock"
    assert run(["lock", "--scenario", "sr-breadboard", "--out", out]) == 0
    allan_out = tmp_path / "allan"
    assert run(["allan", "--input", out / "locked_trace.csv",
                "--taus", "1.5,3.0,6.0", "--out", allan_out]) == 0
    lines = (allan_out / "stability.csv").read_text().splitlines()
    assert len(lines) == 2 + 3


def test_budget_command(tmp_path):
    out = tmp_path / "budget"
    assert run(["budget", "--scenario", "sr-breadboard", "--out", out]) == 0
    doc = json.loads((out / "budget.json").read_text())
    names = [e["name"] for e in doc["entries"]]
    assert names == ["black-body", "quadratic-zeeman", "lattice-stark", "density"]
    assert doc["goal"] == 5e-17
    text = (out / "budget.txt").read_text()
    assert "black-body" in text


def test_search_command(tmp_path):
    out = tmp_path / "search"
    assert run(["search", "--scenario", "sr-breadboard", "--out", out]) == 0
    doc = json.loads((out / "search.json").read_text())
    assert doc["found"] is True
    assert abs(doc["center"] - 3.7e4) < 2e4


def test_compare_command(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert run(["lock", "--scenario", "sr-breadboard", "--out", a, "--seed", "1"]) == 0
    assert run(["lock", "--scenario", "sr-breadboard", "--out", b, "--seed", "2"]) == 0
    out = tmp_path / "cmp"
    assert run(["compare", "--input", a / "locked_trace.csv",
                "--input", b / "locked_trace.csv", "--out", out]) == 0
    assert (out / "difference_trace.csv").exists()
    assert (out / "difference_stability.csv").exists()


def test_compare_needs_two_inputs(tmp_path):
    assert run(["compare", "--input", "x.csv", "--out", tmp_path]) == 2


@pytest.mark.parametrize("command", ["prep", "scan", "lock", "search", "budget"])
def test_unknown_scenario_exits_2(tmp_path, command):
    assert run([command, "--scenario", "nope", "--out", tmp_path]) == 2


def test_bad_config_exits_2(tmp_path):
    doc = yaml.safe_load(builtin_config_path().read_text())
    doc["scenarios"]["sr-breadboard"]["lattice"]["waisst"] = \
        doc["scenarios"]["sr-breadboard"]["lattice"].pop("waist")
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    assert run(["prep", "--scenario", "sr-breadboard", "--config", cfg,
                "--out", tmp_path / "out"]) == 2


def test_missing_input_exits_4(tmp_path):
    assert run(["allan", "--input", tmp_path / "missing.csv",
                "--out", tmp_path / "out"]) == 4


def test_divergent_lock_exits_3(tmp_path):
    doc = yaml.safe_load(builtin_config_path().read_text())
    doc["scenarios"]["sr-breadboard"]["servo"]["gain_i"] = 1e10
    doc["scenarios"]["sr-breadboard"]["servo"]["n_cycles"] = 2000
    cfg = tmp_path / "runaway.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    assert run(["lock", "--scenario", "sr-breadboard", "--config", cfg,
                "--out", tmp_path / "out"]) == 3


@pytest.mark.parametrize("command", ["prep", "scan", "lock", "search", "budget"])
def test_seeded_commands_byte_identical(tmp_path, command):
    first = tmp_path / "first"
    second = tmp_path / "second"
    for out in (first, second):
        assert run([command, "--scenario", "sr-breadboard", "--seed", "4242",
                    "--out", out]) == 0
    names = [p.name for p in data_files(first)]
    assert names == [p.name for p in data_files(second)]
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    # manifests agree on everything but the timestamp
    m1 = json.loads((first / "manifest.json").read_text())
    m2 = json.loads((second / "manifest.json").read_text())
    m1.pop("created"), m2.pop("created")
    assert m1 == m2
