"""Atom-preparation pipeline: oven -> Zeeman slower -> two MOT stages -> lattice.

Stage outcomes (capture fractions, final temperatures) are configured
constants rather than solutions of cooling rate equations; the model
reproduces endpoint numbers, not cooling dynamics. Atom number is a
real-valued mean and the pipeline is fully deterministic; shot noise is
applied only where detection matters (spectroscopy module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .constants import BOHR_MAGNETON, BOLTZMANN, HBAR, STANDARD_GRAVITY
from .species import SpeciesRecord


class PipelineStage(IntEnum):
    OVEN = 0
    SLOWER = 1
    MOT1 = 2
    MOT2_BROADBAND = 3
    MOT2_SINGLE = 4
    LATTICE = 5


@dataclass(frozen=True)
class EnsembleState:
    atom_number: float  # mean count
    temperature: float  # K
    rms_radius: float  # m
    stage: PipelineStage
    species: SpeciesRecord

    def __post_init__(self) -> None:
        if self.atom_number < 0:
            raise ValueError(f"atom_number must be >= 0, got {self.atom_number}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0 K, got {self.temperature}")


@dataclass(frozen=True)
class StageConfig:
    stage: PipelineStage  # stage this config transitions into
    duration: float  # s
    capture_fraction: float
    final_temperature: float  # K
    loss_time_constant: float = math.inf  # s; inf -> lossless transfer
    extra: dict = field(default_factory=dict)  # named scalars, e.g. modulation span

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if not 0 <= self.capture_fraction <= 1:
            raise ValueError(f"capture_fraction must be in [0,1], got {self.capture_fraction}")
        if self.loss_time_constant <= 0:
            raise ValueError(f"loss_time_constant must be > 0, got {self.loss_time_constant}")


@dataclass(frozen=True)
class SlowerConfig:
    length: float  # m
    detuning: float  # Hz, slowing-beam detuning (negative = red)
    efficiency: float = 1.0  # fraction of the ideal deceleration actually used
    field_profile_samples: int = 101

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must be in (0,1], got {self.efficiency}")


def slower_capture_velocity(species: SpeciesRecord, slower: SlowerConfig) -> float:
    """Maximum capture velocity sqrt(2*eta*a_max*L) of the slower.

    a_max = hbar*k*Gamma/(2m) is the peak radiation-pressure deceleration on
    the first-stage cooling transition.
    """
    t = species.cooling1
    a_max = HBAR * (2 * math.pi / t.wavelength) * t.angular_linewidth / (2 * species.mass)
    return math.sqrt(2 * slower.efficiency * a_max * slower.length)


def slower_field_profile(
    species: SpeciesRecord, slower: SlowerConfig
) -> list[tuple[float, float]]:
    """Ideal decelerator field B(z) = B_bias + B0*sqrt(1 - z/L) on a uniform grid.

    B0 maps the capture velocity's Doppler shift onto the Zeeman shift
    (one Bohr magneton per unit field); B_bias absorbs the slowing-beam
    detuning. Monotone decreasing along the slower axis.
    """
    v_c = slower_capture_velocity(species, slower)
    k = 2 * math.pi / species.cooling1.wavelength
    b0 = HBAR * k * v_c / BOHR_MAGNETON
    b_bias = HBAR * abs(2 * math.pi * slower.detuning) / BOHR_MAGNETON
    zs = np.linspace(0.0, slower.length, slower.field_profile_samples)
    return [(float(z), float(b_bias + b0 * math.sqrt(1 - z / slower.length))) for z in zs]


def mot_load(rate: float, loss_time_constant: float, t: float) -> float:
    """Loading curve N(t) = R*tau*(1 - exp(-t/tau)); t = inf gives the steady state."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if loss_time_constant <= 0:
        raise ValueError(f"loss_time_constant must be > 0, got {loss_time_constant}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return rate * loss_time_constant * -math.expm1(-t / loss_time_constant)


def mot_enhancement(source: str, multiplier: float = 3.0) -> float:
    """Loading-rate multiplier for an auxiliary atom source feeding the MOT."""
    if source == "none":
        return 1.0
    if source == "2d-mot":
        if multiplier < 1:
            raise ValueError(f"enhancement multiplier must be >= 1, got {multiplier}")
        return multiplier
    raise ValueError(f"unknown source {source!r}; expected 'none' or '2d-mot'")


def run_stage(state: EnsembleState, cfg: StageConfig) -> EnsembleState:
    """Advance the ensemble one pipeline stage.

    N -> N * capture_fraction * exp(-duration/loss_time_constant), temperature
    set to the stage endpoint. Transitions must move strictly forward.
    """
    if cfg.stage <= state.stage:
        raise ValueError(
            f"out-of-order stage transition {state.stage.name} -> {cfg.stage.name}"
        )
    survival = math.exp(-cfg.duration / cfg.loss_time_constant)
    return replace(
        state,
        atom_number=state.atom_number * cfg.capture_fraction * survival,
        temperature=cfg.final_temperature,
        stage=cfg.stage,
    )


def lattice_transfer_fraction(temperature: float, depth: float, eta_cap: float = 1.0) -> float:
    """MOT-to-lattice transfer from the 3D Maxwell-Boltzmann energy CDF.

    Fraction of atoms with E < k_B*U0: P(x) = 1 - (1 + x + x^2/2)*exp(-x)
    with x = depth/temperature (both in kelvin), scaled by eta_cap.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    x = depth / temperature
    return eta_cap * float(-math.expm1(-x) - (x + x * x / 2) * math.exp(-x))


def transfer_to_lattice(
    state: EnsembleState, depth: float, eta_cap: float = 1.0
) -> EnsembleState:
    """Load the sample into the lattice; captured fraction set by the energy CDF."""
    if state.stage >= PipelineStage.LATTICE:
        raise ValueError(f"out-of-order stage transition from {state.stage.name}")
    fraction = lattice_transfer_fraction(state.temperature, depth, eta_cap)
    return replace(
        state, atom_number=state.atom_number * fraction, stage=PipelineStage.LATTICE
    )


def hold_in_lattice(state: EnsembleState, t: float, lifetime: float) -> EnsembleState:
    """Exponential trap loss N(t) = N0*exp(-t/tau) at constant temperature."""
    if state.stage != PipelineStage.LATTICE:
        raise ValueError(f"hold requires the lattice stage, got {state.stage.name}")
    if lifetime <= 0:
        raise ValueError(f"lifetime must be > 0, got {lifetime}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return replace(state, atom_number=state.atom_number * math.exp(-t / lifetime))


def tof_expansion(sigma0: float, temperature: float, mass: float, t: float) -> float:
    """Thermal time-of-flight cloud size sqrt(sigma0^2 + (k_B*T/m)*t^2)."""
    if sigma0 < 0 or temperature < 0 or mass <= 0 or t < 0:
        raise ValueError("tof_expansion requires sigma0, T, t >= 0 and mass > 0")
    return math.sqrt(sigma0**2 + (BOLTZMANN * temperature / mass) * t**2)


def fit_temperature(samples: list[tuple[float, float]], mass: float) -> tuple[float, float]:
    """Fit TOF thermometry data to recover (temperature, initial size).

    Parameters
    ----------
    samples : list of (t, sigma)
        Expansion times in s and measured rms cloud sizes in m; at least
        three points with distinct times.
    mass : float
        Atomic mass in kg.

    Returns
    -------
    (temperature_k, sigma0_m)
        From the least-squares line sigma^2 = sigma0^2 + (k_B*T/m)*t^2,
        which is linear in t^2.
    """
    if len(samples) < 3:
        raise ValueError(f"need >= 3 samples, got {len(samples)}")
    t = np.asarray([s[0] for s in samples], dtype=float)
    sigma = np.asarray([s[1] for s in samples], dtype=float)
    x = t**2
    if np.ptp(x) == 0:
        raise ValueError("degenerate design matrix: all sample times equal")
    design = np.column_stack([np.ones_like(x), x])
    (intercept, slope), *_ = np.linalg.lstsq(design, sigma**2, rcond=None)
    temperature = slope * mass / BOLTZMANN
    sigma0 = math.sqrt(max(intercept, 0.0))
    return float(temperature), sigma0


def free_fall_displacement(t: float) -> float:
    """Drop distance g*t^2/2 of the untrapped fraction after release."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return STANDARD_GRAVITY * t**2 / 2


def ballistic_escape_time(capture_radius: float, temperature: float, mass: float) -> float:
    """Time scale r/v_thermal for untrapped atoms to leave the recapture region."""
    if capture_radius <= 0 or temperature <= 0 or mass <= 0:
        raise ValueError("capture_radius, temperature and mass must be > 0")
    return capture_radius / math.sqrt(BOLTZMANN * temperature / mass)


def recapture_fraction(
    hold: float, lattice_on: bool, lifetime: float, escape_time: float
) -> float:
    """Recaptured fraction after a dark hold.

    Lattice on: exponential trap loss exp(-hold/tau). Lattice off: ballistic
    escape exp(-(hold/tau_esc)^2); tau_esc is calibrated per scenario so the
    fraction drops below the 1% detection threshold by 20 ms at MOT
    temperatures.
    """
    if hold < 0:
        raise ValueError(f"hold must be >= 0, got {hold}")
    if lattice_on:
        if lifetime <= 0:
            raise ValueError(f"lifetime must be > 0, got {lifetime}")
        return math.exp(-hold / lifetime)
    if escape_time <= 0:
        raise ValueError(f"escape_time must be > 0, got {escape_time}")
    return math.exp(-((hold / escape_time) ** 2))


# Detection threshold below which a recaptured fraction counts as "no atoms".
RECAPTURE_DETECTION_THRESHOLD = 0.01


@dataclass(frozen=True)
class StageReport:
    stage: str
    duration: float  # s
    atom_number: float
    temperature: float  # K


@dataclass(frozen=True)
class PrepConfig:
    """Everything the prep runner needs, in pipeline order."""

    mot1_load_rate: float  # atoms/s before enhancement
    mot1_loss_time_constant: float  # s
    mot1_load_time: float  # s; inf -> steady state
    mot1_temperature: float  # K
    mot1_rms_radius: float  # m
    stages: tuple[StageConfig, ...]
    slower: SlowerConfig
    lattice_depth: float  # K
    transfer_eta_cap: float
    lattice_lifetime: float  # s
    hold_time: float  # s
    source: str = "none"
    source_multiplier: float = 1.0


def run_prep(species: SpeciesRecord, cfg: PrepConfig) -> tuple[list[StageReport], EnsembleState]:
    """Carry an ensemble through the whole chain and tabulate each stage."""
    reports: list[StageReport] = []
    rate = cfg.mot1_load_rate * mot_enhancement(cfg.source, cfg.source_multiplier)
    n_mot1 = mot_load(rate, cfg.mot1_loss_time_constant, cfg.mot1_load_time)
    state = EnsembleState(
        atom_number=n_mot1,
        temperature=cfg.mot1_temperature,
        rms_radius=cfg.mot1_rms_radius,
        stage=PipelineStage.MOT1,
        species=species,
    )
    reports.append(
        StageReport("mot1", cfg.mot1_load_time, state.atom_number, state.temperature)
    )
    for stage_cfg in cfg.stages:
        state = run_stage(state, stage_cfg)
        reports.append(
            StageReport(
                stage_cfg.stage.name.lower(),
                stage_cfg.duration,
                state.atom_number,
                state.temperature,
            )
        )
    state = transfer_to_lattice(state, cfg.lattice_depth, cfg.transfer_eta_cap)
    reports.append(StageReport("lattice", 0.0, state.atom_number, state.temperature))
    if cfg.hold_time > 0:
        state = hold_in_lattice(state, cfg.hold_time, cfg.lattice_lifetime)
        reports.append(
            StageReport("hold", cfg.hold_time, state.atom_number, state.temperature)
        )
    return reports, state
