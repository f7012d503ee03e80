"""Scenario configuration: YAML loading with strict validation, plus the
runners that bind a scenario to the physics modules.

Validation is strict on purpose: unknown keys are fatal and errors carry the
field path, because a silently misconfigured physics scenario is worse than
a loud failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import systematics as sys_mod
from .lattice import (LatticeConfig, TrapDerived, derive_trap, lattice_light_shift,
                      occupied_trap_volume, recoil_depth)
from .noise import FrequencyTrace, NoiseSpec, flicker_floor_spec, synthesize
from .pipeline import (PipelineStage, PrepConfig, SlowerConfig, StageConfig,
                       StageReport, run_prep, slower_capture_velocity)
from .rng import RngStream
from .servo import LockResult, ServoConfig, make_rabi_line, run_lock
from .species import SpeciesRecord, get_species
from .spectroscopy import (ChirpSearchResult, ProbeConfig, Spectrum, chirp_search,
                           fourier_limited_fwhm, induced_rabi_frequency, scan_line,
                           synthesize_lineshape)

SCENARIO_SCHEMA = "latticeclock/scenarios/1"

# Fixed per-subsystem stream ids so parallel commands never share a stream.
STREAM_SCAN = 1
STREAM_LOCK = 2  # lock internally derives stream 3 for LO synthesis
STREAM_SEARCH = 4


class ScenarioError(ValueError):
    """Configuration parse or validation failure; message names the field."""


def _check_keys(mapping: dict, path: str, required: set[str],
                optional: set[str] = frozenset()) -> None:
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{path}: expected a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - required - set(optional)
    if unknown:
        raise ScenarioError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ScenarioError(f"{path}: missing key(s) {sorted(missing)}")


class _UniqueKeyLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys instead of overriding."""


def _construct_mapping(loader, node, deep=False):
    keys = [loader.construct_object(k, deep=deep) for k, _ in node.value]
    if len(keys) != len(set(keys)):
        dupes = sorted({k for k in keys if keys.count(k) > 1})
        raise ScenarioError(f"duplicate key(s) in config: {dupes}")
    return yaml.SafeLoader.construct_mapping(loader, node, deep)


_UniqueKeyLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass(frozen=True)
class ScanConfig:
    halfspan: float  # Hz around the line center
    points: int
    atoms_per_point: int
    carrier_broadening: float  # Hz


@dataclass(frozen=True)
class ServoRunConfig:
    servo: ServoConfig
    n_cycles: int
    initial_line_offset: float  # Hz


@dataclass(frozen=True)
class BbrConfig:
    model: sys_mod.BbrModel
    temperature: float
    temperature_uncertainty: float


@dataclass(frozen=True)
class ZeemanConfig:
    coefficient: float  # Hz/T^2
    field_relative_uncertainty: float


@dataclass(frozen=True)
class LatticeStarkConfig:
    slope: float  # Hz per Hz detuning per recoil depth
    detuning: float  # Hz from magic
    detuning_uncertainty: float  # Hz


@dataclass(frozen=True)
class DensityConfig:
    coefficient: float  # Hz m^3
    relative_uncertainty: float
    cloud_axial_rms: float  # m


@dataclass(frozen=True)
class SystematicsConfig:
    bbr: BbrConfig
    zeeman: ZeemanConfig
    lattice_stark: LatticeStarkConfig
    density: DensityConfig
    goal: float = sys_mod.ACCURACY_GOAL


@dataclass(frozen=True)
class SearchConfig:
    span: float
    period: float
    pulse_time: float
    steps_per_sweep: int
    true_line_offset: float
    guess_offset: float
    atoms: int
    hit_excitation: float = 0.5


@dataclass(frozen=True)
class Scenario:
    name: str
    species: SpeciesRecord
    seed: int
    prep: PrepConfig
    lattice: LatticeConfig
    trap: TrapDerived
    probe: ProbeConfig
    scan: ScanConfig
    noise: NoiseSpec
    servo_run: ServoRunConfig
    systematics: SystematicsConfig
    search: SearchConfig
    raw: dict = field(repr=False, default_factory=dict)  # config echo

    def rng(self, stream_id: int) -> RngStream:
        return RngStream(self.seed, stream_id)


def builtin_config_path() -> Path:
    """Path to the scenario file shipped with the package."""
    return Path(resources.files("latticeclock").joinpath("data/scenarios.yaml"))


def list_scenarios(path: str | Path | None = None) -> list[str]:
    doc = _load_document(path)
    return sorted(doc["scenarios"])


def load_scenario(path: str | Path | None, name: str,
                  seed_override: int | None = None) -> Scenario:
    """Load and fully validate one named scenario.

    ``path = None`` reads the shipped file. Unknown keys anywhere in the
    document are fatal; the error names the offending field.
    """
    doc = _load_document(path)
    if name not in doc["scenarios"]:
        known = ", ".join(sorted(doc["scenarios"]))
        raise ScenarioError(f"unknown scenario {name!r}; file defines: {known}")
    return _parse_scenario(name, doc["scenarios"][name], seed_override)


def _load_document(path: str | Path | None) -> dict:
    path = builtin_config_path() if path is None else Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    _check_keys(doc, str(path), {"schema", "scenarios"})
    if doc["schema"] != SCENARIO_SCHEMA:
        raise ScenarioError(f"{path}: schema {doc['schema']!r} != {SCENARIO_SCHEMA!r}")
    return doc


def _parse_scenario(name: str, cfg: dict, seed_override: int | None) -> Scenario:
    path = f"scenarios.{name}"
    _check_keys(cfg, path, {"species", "seed", "prep", "lattice", "probe",
                            "noise", "servo", "systematics", "search"},
                {"species_overrides"})
    try:
        species = get_species(cfg["species"], cfg.get("species_overrides"))
    except KeyError as exc:
        raise ScenarioError(f"{path}.species: {exc}") from exc
    seed = int(cfg["seed"] if seed_override is None else seed_override)

    lattice = _parse_lattice(cfg["lattice"], f"{path}.lattice")
    trap = derive_trap(lattice, species)
    prep = _parse_prep(cfg["prep"], f"{path}.prep", trap.depth)
    probe, scan = _parse_probe(cfg["probe"], f"{path}.probe")
    noise_spec = _parse_noise(cfg["noise"], f"{path}.noise")
    servo_run = _parse_servo(cfg["servo"], f"{path}.servo", probe)
    systematics = _parse_systematics(cfg["systematics"], f"{path}.systematics")
    search = _parse_search(cfg["search"], f"{path}.search")

    try:
        return Scenario(name=name, species=species, seed=seed, prep=prep,
                        lattice=lattice, trap=trap, probe=probe, scan=scan,
                        noise=noise_spec, servo_run=servo_run,
                        systematics=systematics, search=search, raw=cfg)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_lattice(cfg: dict, path: str) -> LatticeConfig:
    _check_keys(cfg, path, {"input_power", "waist", "wavelength"},
                {"enhancement_factor", "geometry"})
    try:
        return LatticeConfig(
            input_power=float(cfg["input_power"]),
            waist=float(cfg["waist"]),
            wavelength=float(cfg["wavelength"]),
            enhancement_factor=float(cfg.get("enhancement_factor", 1.0)),
            geometry=cfg.get("geometry", "retro-reflected"),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


_STAGES = {s.name.lower(): s for s in PipelineStage}


def _parse_prep(cfg: dict, path: str, lattice_depth: float) -> PrepConfig:
    _check_keys(cfg, path, {"mot1", "slower", "stages", "transfer", "hold"},
                {"recapture"})
    mot1 = cfg["mot1"]
    _check_keys(mot1, f"{path}.mot1",
                {"load_rate", "loss_time_constant", "load_time", "temperature",
                 "rms_radius"},
                {"source", "source_multiplier"})
    slower_cfg = cfg["slower"]
    _check_keys(slower_cfg, f"{path}.slower", {"length", "detuning"}, {"efficiency"})
    stages = []
    for i, stage_cfg in enumerate(cfg["stages"]):
        spath = f"{path}.stages[{i}]"
        _check_keys(stage_cfg, spath,
                    {"stage", "duration", "capture_fraction", "final_temperature"},
                    {"loss_time_constant", "extra"})
        stage_name = stage_cfg["stage"]
        if stage_name not in _STAGES:
            raise ScenarioError(f"{spath}.stage: unknown stage {stage_name!r}; "
                                f"expected one of {sorted(_STAGES)}")
        try:
            stages.append(StageConfig(
                stage=_STAGES[stage_name],
                duration=float(stage_cfg["duration"]),
                capture_fraction=float(stage_cfg["capture_fraction"]),
                final_temperature=float(stage_cfg["final_temperature"]),
                loss_time_constant=float(stage_cfg.get("loss_time_constant", math.inf)),
                extra=dict(stage_cfg.get("extra", {})),
            ))
        except ValueError as exc:
            raise ScenarioError(f"{spath}: {exc}") from exc
    transfer = cfg["transfer"]
    _check_keys(transfer, f"{path}.transfer", {"eta_cap"})
    hold = cfg["hold"]
    _check_keys(hold, f"{path}.hold", {"lifetime", "time"})
    recapture = cfg.get("recapture", {"escape_time": 9.0e-3})
    _check_keys(recapture, f"{path}.recapture", {"escape_time"})
    try:
        return PrepConfig(
            mot1_load_rate=float(mot1["load_rate"]),
            mot1_loss_time_constant=float(mot1["loss_time_constant"]),
            mot1_load_time=float(mot1["load_time"]),
            mot1_temperature=float(mot1["temperature"]),
            mot1_rms_radius=float(mot1["rms_radius"]),
            stages=tuple(stages),
            slower=SlowerConfig(
                length=float(slower_cfg["length"]),
                detuning=float(slower_cfg["detuning"]),
                efficiency=float(slower_cfg.get("efficiency", 1.0)),
            ),
            lattice_depth=lattice_depth,
            transfer_eta_cap=float(transfer["eta_cap"]),
            lattice_lifetime=float(hold["lifetime"]),
            hold_time=float(hold["time"]),
            source=mot1.get("source", "none"),
            source_multiplier=float(mot1.get("source_multiplier", 1.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_probe(cfg: dict, path: str) -> tuple[ProbeConfig, ScanConfig]:
    _check_keys(cfg, path,
                {"pulse_time", "scan_halfspan", "scan_points", "atoms_per_point"},
                {"magnetic_field", "intensity", "coupling", "rabi_frequency",
                 "carrier_broadening"})
    pulse_time = float(cfg["pulse_time"])
    if "rabi_frequency" in cfg:
        if "coupling" in cfg:
            raise ScenarioError(f"{path}: give either rabi_frequency or coupling, "
                                "not both")
        omega = float(cfg["rabi_frequency"])
        b_field = float(cfg.get("magnetic_field", 0.0))
        intensity = float(cfg.get("intensity", 0.0))
    elif "coupling" in cfg:
        b_field = float(cfg.get("magnetic_field", 0.0))
        intensity = float(cfg.get("intensity", 0.0))
        omega = induced_rabi_frequency(b_field, intensity, float(cfg["coupling"]))
    else:
        raise ScenarioError(f"{path}: needs rabi_frequency or coupling")
    try:
        probe = ProbeConfig(rabi_frequency=omega, pulse_time=pulse_time,
                            magnetic_field=b_field, probe_intensity=intensity)
        scan = ScanConfig(
            halfspan=float(cfg["scan_halfspan"]),
            points=int(cfg["scan_points"]),
            atoms_per_point=int(cfg["atoms_per_point"]),
            carrier_broadening=float(cfg.get("carrier_broadening", 0.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    if scan.points < 3 or scan.halfspan <= 0 or scan.atoms_per_point < 1:
        raise ScenarioError(f"{path}: scan grid needs halfspan > 0, points >= 3, "
                            "atoms_per_point >= 1")
    return probe, scan


def _parse_noise(cfg: dict, path: str) -> NoiseSpec:
    _check_keys(cfg, path, set(),
                {"white_fm_h0", "flicker_fm_hm1", "flicker_floor_sigma",
                 "random_walk_hm2", "linear_drift"})
    if "flicker_fm_hm1" in cfg and "flicker_floor_sigma" in cfg:
        raise ScenarioError(f"{path}: give either flicker_fm_hm1 or "
                            "flicker_floor_sigma, not both")
    floor = float(cfg.get("flicker_floor_sigma", 0.0))
    hm1 = flicker_floor_spec(floor).flicker_fm_hm1 if floor > 0 \
        else float(cfg.get("flicker_fm_hm1", 0.0))
    try:
        return NoiseSpec(
            white_fm_h0=float(cfg.get("white_fm_h0", 0.0)),
            flicker_fm_hm1=hm1,
            random_walk_hm2=float(cfg.get("random_walk_hm2", 0.0)),
            linear_drift=float(cfg.get("linear_drift", 0.0)),
            flicker_floor_sigma=floor,
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_servo(cfg: dict, path: str, probe: ProbeConfig) -> ServoRunConfig:
    _check_keys(cfg, path, {"gain_i", "gain_p", "cycle_time", "atom_number",
                            "n_cycles"},
                {"initial_line_offset", "modulation_halfwidth"})
    cycle_time = float(cfg["cycle_time"])
    if cycle_time <= probe.pulse_time:
        raise ScenarioError(f"{path}.cycle_time: must exceed the probe pulse time "
                            f"{probe.pulse_time} s, got {cycle_time} s")
    halfwidth = float(cfg.get("modulation_halfwidth", 0.0))
    if halfwidth == 0.0:
        halfwidth = fourier_limited_fwhm(probe.pulse_time) / 2
    try:
        servo = ServoConfig(
            gain_i=float(cfg["gain_i"]),
            gain_p=float(cfg["gain_p"]),
            cycle_time=cycle_time,
            modulation_halfwidth=halfwidth,
            atom_number=int(cfg["atom_number"]),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    n_cycles = int(cfg["n_cycles"])
    if n_cycles < 2:
        raise ScenarioError(f"{path}.n_cycles: need >= 2, got {n_cycles}")
    return ServoRunConfig(servo, n_cycles, float(cfg.get("initial_line_offset", 0.0)))


def _parse_systematics(cfg: dict, path: str) -> SystematicsConfig:
    _check_keys(cfg, path, {"bbr", "zeeman", "lattice_stark", "density"}, {"goal"})
    bbr = cfg["bbr"]
    _check_keys(bbr, f"{path}.bbr",
                {"coefficient", "temperature", "temperature_uncertainty"},
                {"reference_temperature"})
    zeeman = cfg["zeeman"]
    _check_keys(zeeman, f"{path}.zeeman", {"coefficient", "field_relative_uncertainty"})
    stark = cfg["lattice_stark"]
    _check_keys(stark, f"{path}.lattice_stark",
                {"slope", "detuning_uncertainty"}, {"detuning"})
    density = cfg["density"]
    _check_keys(density, f"{path}.density",
                {"coefficient", "relative_uncertainty", "cloud_axial_rms"})
    try:
        return SystematicsConfig(
            bbr=BbrConfig(
                model=sys_mod.BbrModel(
                    coefficient=float(bbr["coefficient"]),
                    reference_temperature=float(bbr.get("reference_temperature", 300.0)),
                ),
                temperature=float(bbr["temperature"]),
                temperature_uncertainty=float(bbr["temperature_uncertainty"]),
            ),
            zeeman=ZeemanConfig(
                coefficient=float(zeeman["coefficient"]),
                field_relative_uncertainty=float(zeeman["field_relative_uncertainty"]),
            ),
            lattice_stark=LatticeStarkConfig(
                slope=float(stark["slope"]),
                detuning=float(stark.get("detuning", 0.0)),
                detuning_uncertainty=float(stark["detuning_uncertainty"]),
            ),
            density=DensityConfig(
                coefficient=float(density["coefficient"]),
                relative_uncertainty=float(density["relative_uncertainty"]),
                cloud_axial_rms=float(density["cloud_axial_rms"]),
            ),
            goal=float(cfg.get("goal", sys_mod.ACCURACY_GOAL)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_search(cfg: dict, path: str) -> SearchConfig:
    _check_keys(cfg, path, {"span", "period", "pulse_time", "true_line_offset"},
                {"steps_per_sweep", "guess_offset", "atoms", "hit_excitation"})
    try:
        return SearchConfig(
            span=float(cfg["span"]),
            period=float(cfg["period"]),
            pulse_time=float(cfg["pulse_time"]),
            steps_per_sweep=int(cfg.get("steps_per_sweep", 20)),
            true_line_offset=float(cfg["true_line_offset"]),
            guess_offset=float(cfg.get("guess_offset", 0.0)),
            atoms=int(cfg.get("atoms", 100_000)),
            hit_excitation=float(cfg.get("hit_excitation", 0.5)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Scenario runners


def run_prep_scenario(sc: Scenario) -> tuple[list[StageReport], dict]:
    """Full preparation chain plus slower diagnostics."""
    reports, final_state = run_prep(sc.species, sc.prep)
    diagnostics = {
        "capture_velocity": slower_capture_velocity(sc.species, sc.prep.slower),
        "lattice_depth_k": sc.trap.depth,
        "axial_trap_frequency_hz": sc.trap.axial_frequency,
        "radial_trap_frequency_hz": sc.trap.radial_frequency,
        "lamb_dicke": sc.trap.lamb_dicke,
        "final_atom_number": final_state.atom_number,
        "final_temperature_k": final_state.temperature,
    }
    return reports, diagnostics


def lattice_sample_temperature(sc: Scenario) -> float:
    """Temperature of the lattice-trapped sample (last configured MOT stage)."""
    return sc.prep.stages[-1].final_temperature if sc.prep.stages \
        else sc.prep.mot1_temperature


def run_scan_scenario(sc: Scenario, rng: RngStream | None = None) -> Spectrum:
    """Synthesize the scenario lineshape and apply detection noise."""
    grid = np.linspace(-sc.scan.halfspan, sc.scan.halfspan, sc.scan.points)
    spectrum = synthesize_lineshape(
        sc.probe, trap=sc.trap, broadening=sc.scan.carrier_broadening,
        sample_temperature=lattice_sample_temperature(sc), detunings=grid)
    rng = rng or sc.rng(STREAM_SCAN)
    return scan_line(spectrum, sc.scan.atoms_per_point, rng)


def run_lock_scenario(sc: Scenario, rng: RngStream | None = None
                      ) -> tuple[LockResult, "FrequencyTrace"]:
    """Lock the scenario oscillator to the clock line.

    Returns the lock result and the free-running oscillator trace it was fed
    (synthesized on stream_id + 1, matching run_lock's own convention).
    """
    rng = rng or sc.rng(STREAM_LOCK)
    lo = synthesize(sc.noise, sc.servo_run.n_cycles, sc.servo_run.servo.cycle_time,
                    rng.derive(rng.stream_id + 1), label="lo")
    lineshape = make_rabi_line(sc.probe.pulse_time, sc.probe.rabi_frequency)
    result = run_lock(lo, sc.servo_run.initial_line_offset, sc.servo_run.servo,
                      lineshape, rng, sc.species.clock_frequency)
    return result, lo


def run_search_scenario(sc: Scenario, rng: RngStream | None = None
                        ) -> ChirpSearchResult:
    """Chirped line search with the scenario's sweep settings."""
    rng = rng or sc.rng(STREAM_SEARCH)
    s = sc.search
    return chirp_search(s.true_line_offset, s.guess_offset, s.span, s.period, rng,
                        pulse_time=s.pulse_time, atom_number=s.atoms,
                        steps_per_sweep=s.steps_per_sweep,
                        hit_excitation=s.hit_excitation)


def assemble_budget(sc: Scenario) -> sys_mod.BudgetResult:
    """Evaluate every configured systematic and total the budget."""
    nu0 = sc.species.clock_frequency
    cfg = sc.systematics
    entries = []

    shift = sys_mod.bbr_shift(cfg.bbr.temperature, cfg.bbr.model)
    unc = abs(sys_mod.bbr_sensitivity(cfg.bbr.temperature, cfg.bbr.model)) \
        * cfg.bbr.temperature_uncertainty
    entries.append(sys_mod.make_entry("black-body", shift, unc, nu0))

    b_field = sc.probe.magnetic_field
    shift = sys_mod.quadratic_zeeman(b_field, cfg.zeeman.coefficient)
    unc = sys_mod.quadratic_zeeman_uncertainty(
        b_field, cfg.zeeman.coefficient,
        b_field * cfg.zeeman.field_relative_uncertainty)
    entries.append(sys_mod.make_entry("quadratic-zeeman", shift, unc, nu0))

    recoil = recoil_depth(sc.species)
    shift = lattice_light_shift(sc.trap.depth, cfg.lattice_stark.detuning,
                                cfg.lattice_stark.slope, recoil)
    unc = abs(lattice_light_shift(sc.trap.depth,
                                  cfg.lattice_stark.detuning_uncertainty,
                                  cfg.lattice_stark.slope, recoil))
    entries.append(sys_mod.make_entry("lattice-stark", shift, unc, nu0))

    reports, _ = run_prep(sc.species, sc.prep)
    loaded = next(r.atom_number for r in reports if r.stage == "lattice")
    volume = occupied_trap_volume(sc.lattice.waist, sc.lattice.wavelength,
                                  cfg.density.cloud_axial_rms)
    shift = sys_mod.density_shift(loaded, volume, cfg.density.coefficient)
    unc = abs(shift) * cfg.density.relative_uncertainty
    entries.append(sys_mod.make_entry("density", shift, unc, nu0))

    return sys_mod.total_budget(entries, nu0, cfg.goal)


def scenario_echo(sc: Scenario) -> dict:
    """Round-trippable config echo for manifests."""
    return {"name": sc.name, "seed": sc.seed, "config": sc.raw}
