"""Command-line entry point.

Subcommands mirror the clock activities: ``prep`` (atom pipeline), ``scan``
(line spectrum with detection noise), ``lock`` (closed-loop servo), ``allan``
(stability of a trace), ``budget`` (systematics), ``compare`` (two-clock
difference), ``search`` (chirped line finding).

Every command writes CSV/JSON artifacts plus a run manifest echoing the full
scenario and seed. Exit codes: 0 success, 2 configuration/validation error,
3 numerical divergence, 4 I/O error. Identical scenario and seed produce
byte-identical data files; only the manifest carries a timestamp.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .allan import octave_taus, overlapping_allan, compare_clocks, write_curve
from .noise import read_trace, write_trace
from .scenarios import (Scenario, ScenarioError, assemble_budget, load_scenario,
                        run_lock_scenario, run_prep_scenario, run_scan_scenario,
                        run_search_scenario, scenario_echo)
from .servo import ServoDivergenceError, write_lock_records
from .systematics import format_budget_table

MANIFEST_SCHEMA = "latticeclock/run-manifest/1"


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario name")
    p.add_argument("--config", default=None,
                   help="scenario YAML (default: shipped file)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeclock",
        description="Deterministic transportable-lattice-clock simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, doc in [
        ("prep", _cmd_prep, "run the atom-preparation chain"),
        ("scan", _cmd_scan, "synthesize a clock-line scan with detection noise"),
        ("lock", _cmd_lock, "close the loop on the clock line"),
        ("budget", _cmd_budget, "evaluate the systematic shift budget"),
        ("search", _cmd_search, "chirped search for the clock line"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_scenario_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("allan", help="overlapping Allan deviation of a trace")
    p.add_argument("--input", required=True, help="trace CSV (index,y)")
    p.add_argument("--taus", default="octave",
                   help="'octave' or comma-separated seconds")
    p.add_argument("--dt", type=float, default=None,
                   help="sample interval if the trace has no JSON sidecar")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=_cmd_allan)

    p = sub.add_parser("compare", help="difference statistics of two traces")
    p.add_argument("--input", action="append", required=True,
                   help="trace CSV; give twice")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--taus", default="octave")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=_cmd_compare)

    return parser


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> Scenario:
    return load_scenario(args.config, args.scenario, seed_override=args.seed)


def _note(sc: Scenario) -> str:
    return f"scenario={sc.name} seed={sc.seed}"


def _write_manifest(out: Path, command: str, outputs: list[str],
                    sc: Scenario | None = None, extra: dict | None = None) -> None:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": __version__,
        "command": command,
        "outputs": sorted(outputs),
        "scenario": scenario_echo(sc) if sc is not None else None,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)
        f.write("\n")


def _cmd_prep(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    reports, diagnostics = run_prep_scenario(sc)
    stages_csv = out / "stages.csv"
    with open(stages_csv, "w") as f:
        f.write(f"# {_note(sc)}\n")
        f.write("stage,duration_s,atom_number,temperature_k\n")
        for r in reports:
            f.write(f"{r.stage},{float(r.duration)!r},{float(r.atom_number)!r},"
                    f"{float(r.temperature)!r}\n")
    with open(out / "prep.json", "w") as f:
        json.dump({"scenario": sc.name, "seed": sc.seed,
                   "stages": [dataclasses.asdict(r) for r in reports],
                   "diagnostics": diagnostics,
                   "config": sc.raw},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out, "prep", ["stages.csv", "prep.json"], sc)
    print(f"prep: {len(reports)} stages -> {stages_csv}")
    return 0


def _cmd_scan(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    spectrum = run_scan_scenario(sc)
    path = out / "spectrum.csv"
    with open(path, "w") as f:
        f.write(f"# {_note(sc)}\n")
        f.write("detuning_hz,excitation_fraction\n")
        for d, p in zip(spectrum.detunings, spectrum.excitation_fractions):
            f.write(f"{float(d)!r},{float(p)!r}\n")
    _write_manifest(out, "scan", ["spectrum.csv"], sc,
                    {"atoms_per_point": sc.scan.atoms_per_point})
    print(f"scan: {len(spectrum.detunings)} points -> {path}")
    return 0


def _cmd_lock(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    result, lo = run_lock_scenario(sc)
    write_trace(lo, out / "free_trace.csv", sc.noise, header_note=_note(sc))
    write_trace(result.trace, out / "locked_trace.csv", sc.noise,
                header_note=_note(sc))
    write_lock_records(result.records, out / "lock_records.csv",
                       header_note=_note(sc))
    _write_manifest(out, "lock",
                    ["free_trace.csv", "locked_trace.csv", "lock_records.csv"], sc)
    print(f"lock: {len(result.records)} probes -> {out / 'locked_trace.csv'}")
    return 0


def _cmd_budget(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    result = assemble_budget(sc)
    table = format_budget_table(result)
    (out / "budget.txt").write_text(f"# {_note(sc)}\n{table}\n")
    with open(out / "budget.json", "w") as f:
        json.dump({"scenario": sc.name, "seed": sc.seed,
                   "entries": [dataclasses.asdict(e) for e in result.entries],
                   "total_fractional_shift": result.total_fractional_shift,
                   "total_fractional_uncertainty": result.total_fractional_uncertainty,
                   "goal": result.goal, "passed": result.passed},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out, "budget", ["budget.txt", "budget.json"], sc)
    print(table)
    return 0


def _cmd_search(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    result = run_search_scenario(sc)
    with open(out / "search.json", "w") as f:
        json.dump({"scenario": sc.name, "seed": sc.seed,
                   **dataclasses.asdict(result)}, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out, "search", ["search.json"], sc)
    status = f"found at {result.center:+.0f} Hz" if result.found else "not found"
    print(f"search: {status} (threshold {result.threshold:.2e})")
    return 0


def _parse_taus(spec: str, trace) -> list[float]:
    if spec == "octave":
        return octave_taus(trace)
    try:
        return [float(t) for t in spec.split(",") if t.strip()]
    except ValueError as exc:
        raise ScenarioError(f"--taus: cannot parse {spec!r}: {exc}") from exc


def _cmd_allan(args) -> int:
    out = _outdir(args)
    trace = read_trace(args.input, dt=args.dt)
    curve = overlapping_allan(trace, _parse_taus(args.taus, trace))
    path = out / "stability.csv"
    write_curve(curve, path, header_note=f"input={args.input}")
    _write_manifest(out, "allan", ["stability.csv"], None,
                    {"input": str(args.input), "dt": trace.dt})
    print(f"allan: {len(curve.taus)} taus -> {path}")
    return 0


def _cmd_compare(args) -> int:
    if len(args.input) != 2:
        raise ScenarioError("compare needs exactly two --input traces")
    out = _outdir(args)
    a = read_trace(args.input[0], dt=args.dt)
    b = read_trace(args.input[1], dt=args.dt)
    taus = None if args.taus == "octave" else _parse_taus(args.taus, a)
    diff, curve = compare_clocks(a, b, taus)
    write_trace(diff, out / "difference_trace.csv",
                header_note=f"inputs={args.input[0]},{args.input[1]}")
    write_curve(curve, out / "difference_stability.csv",
                header_note="per-clock instability for identical clocks: sigma/sqrt(2)")
    _write_manifest(out, "compare",
                    ["difference_trace.csv", "difference_stability.csv"], None,
                    {"inputs": list(args.input),
                     "per_clock_convention": "sigma/sqrt(2)"})
    print(f"compare: {len(curve.taus)} taus -> {out / 'difference_stability.csv'}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ServoDivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
