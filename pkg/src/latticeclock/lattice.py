"""Standing-wave trap physics: depth, trap frequencies, Lamb-Dicke parameter,
sideband positions, and the residual light shift away from the magic wavelength.

Depth uses a per-species calibration constant pinned to the measured Sr
working point (280 mW, 50 um waist -> 5 uK); the retro-reflection intensity
factor is folded into the constant. The Yb constant defaults to the Sr value
until overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import BOLTZMANN, HBAR, PLANCK
from .species import SpeciesRecord

# K m^2 / W, from the Sr anchor: 5 uK at 280 mW focused to a 50 um waist.
DEPTH_CALIBRATION = {
    "Sr": 5e-6 * (50e-6) ** 2 / 0.280,
    "Yb": 5e-6 * (50e-6) ** 2 / 0.280,
}

# Acceptable distance from the catalog magic wavelength before flagging.
MAGIC_WAVELENGTH_TOLERANCE = 20e-9  # m

RETRO_REFLECTED = "retro-reflected"
CAVITY = "cavity"


@dataclass(frozen=True)
class LatticeConfig:
    input_power: float  # W
    waist: float  # m
    wavelength: float  # m
    enhancement_factor: float = 1.0  # cavity buildup; 1 for plain retro-reflection
    geometry: str = RETRO_REFLECTED

    def __post_init__(self) -> None:
        if self.waist <= 0:
            raise ValueError(f"waist must be > 0, got {self.waist}")
        if self.input_power < 0:
            raise ValueError(f"input_power must be >= 0, got {self.input_power}")
        if self.enhancement_factor < 1:
            raise ValueError(
                f"enhancement_factor must be >= 1, got {self.enhancement_factor}"
            )
        if self.geometry not in (RETRO_REFLECTED, CAVITY):
            raise ValueError(f"unknown geometry {self.geometry!r}")


@dataclass(frozen=True)
class TrapDerived:
    depth: float  # K
    axial_frequency: float  # Hz
    radial_frequency: float  # Hz
    lamb_dicke: float

    def __post_init__(self) -> None:
        for v in (self.depth, self.axial_frequency, self.radial_frequency, self.lamb_dicke):
            if v < 0:
                raise ValueError("TrapDerived fields must be >= 0")

    @property
    def clock_operation_ok(self) -> bool:
        """Lamb-Dicke confinement flag: eta < 1 is required for clock operation."""
        return self.lamb_dicke < 1


def _calibration(species: SpeciesRecord) -> float:
    try:
        return DEPTH_CALIBRATION[species.name[:2]]
    except KeyError:
        raise KeyError(f"no depth calibration for species {species.name!r}") from None


def trap_depth(cfg: LatticeConfig, species: SpeciesRecord) -> float:
    """Lattice depth in kelvin: C_species * enhancement * P / w^2.

    Exactly linear in power and enhancement, exactly 1/w^2 in the waist.
    Raises if the lattice wavelength sits far from the species' magic value.
    """
    if abs(cfg.wavelength - species.lattice_magic_wavelength) > MAGIC_WAVELENGTH_TOLERANCE:
        raise ValueError(
            f"lattice wavelength {cfg.wavelength:.4g} m is far from the "
            f"{species.name} magic wavelength {species.lattice_magic_wavelength:.4g} m"
        )
    return _calibration(species) * cfg.enhancement_factor * cfg.input_power / cfg.waist**2


def required_power(depth: float, waist: float, species: SpeciesRecord,
                   enhancement_factor: float = 1.0) -> float:
    """Invert the depth formula: effective power needed for a target depth."""
    if depth < 0 or waist <= 0 or enhancement_factor < 1:
        raise ValueError("depth >= 0, waist > 0 and enhancement >= 1 required")
    return depth * waist**2 / (_calibration(species) * enhancement_factor)


def trap_frequencies(depth: float, wavelength: float, mass: float,
                     waist: float) -> tuple[float, float]:
    """Axial and radial trap frequencies (Hz) of the harmonic expansion.

    omega_z = (2pi/lambda)*sqrt(2 k_B U0 / m), from the sin^2 axial curvature;
    omega_r = sqrt(4 k_B U0 / (m w^2)), from the Gaussian transverse profile.
    """
    if depth < 0 or wavelength <= 0 or mass <= 0 or waist <= 0:
        raise ValueError("depth >= 0 and wavelength, mass, waist > 0 required")
    omega_z = (2 * math.pi / wavelength) * math.sqrt(2 * BOLTZMANN * depth / mass)
    omega_r = math.sqrt(4 * BOLTZMANN * depth / (mass * waist**2))
    return omega_z / (2 * math.pi), omega_r / (2 * math.pi)


def lamb_dicke(axial_frequency: float, species: SpeciesRecord) -> float:
    """Lamb-Dicke parameter (2pi/lambda_clock)*sqrt(hbar/(2 m omega_z))."""
    if axial_frequency <= 0:
        raise ValueError(f"axial_frequency must be > 0, got {axial_frequency}")
    omega_z = 2 * math.pi * axial_frequency
    return (2 * math.pi / species.clock_wavelength) * math.sqrt(
        HBAR / (2 * species.mass * omega_z)
    )


def derive_trap(cfg: LatticeConfig, species: SpeciesRecord) -> TrapDerived:
    """Bundle depth, trap frequencies and Lamb-Dicke parameter for one setup."""
    depth = trap_depth(cfg, species)
    nu_z, nu_r = trap_frequencies(depth, cfg.wavelength, species.mass, cfg.waist)
    eta = lamb_dicke(nu_z, species) if nu_z > 0 else 0.0
    return TrapDerived(depth, nu_z, nu_r, eta)


def sideband_positions(carrier: float, axial_frequency: float) -> tuple[float, float]:
    """Red and blue motional sideband frequencies (carrier -/+ nu_z)."""
    if axial_frequency < 0:
        raise ValueError(f"axial_frequency must be >= 0, got {axial_frequency}")
    return carrier - axial_frequency, carrier + axial_frequency


def recoil_depth(species: SpeciesRecord) -> float:
    """Lattice photon recoil energy at the magic wavelength, in kelvin."""
    return (PLANCK / species.lattice_magic_wavelength) ** 2 / (
        2 * species.mass * BOLTZMANN
    )


def lattice_light_shift(depth: float, detuning_from_magic: float, slope: float,
                        recoil: float) -> float:
    """Residual clock shift of a lattice detuned from the magic wavelength.

    Zero at the magic point and linear in the detuning:
    shift = slope * detuning * (depth / recoil), with slope in Hz of clock
    shift per Hz of lattice detuning per recoil of depth (a config scalar).
    """
    if recoil <= 0:
        raise ValueError(f"recoil depth must be > 0, got {recoil}")
    return slope * detuning_from_magic * (depth / recoil)


def occupied_trap_volume(waist: float, lattice_wavelength: float,
                         cloud_axial_rms: float) -> float:
    """Effective sample volume: occupied lattice sites times the site volume.

    Sites span +/- one axial rms radius at lambda/2 pitch; each site
    contributes (lambda/2) * (pi w^2 / 2).
    """
    if waist <= 0 or lattice_wavelength <= 0 or cloud_axial_rms <= 0:
        raise ValueError("waist, wavelength and cloud size must be > 0")
    pitch = lattice_wavelength / 2
    n_sites = max(1, math.ceil(2 * cloud_axial_rms / pitch))
    return n_sites * pitch * math.pi * waist**2 / 2
