"""Atomic species catalog: masses, cooling/clock transitions, magic wavelengths.

The catalog carries the wavelengths the apparatus is built around (Sr: 461,
689, 813, 698 nm; Yb: 399, 556, 759, 578 nm plus the 1389 nm repumper).
Clock frequencies default to c/lambda; scenario configs may override them
with exact values. Hyperfine structure is not modeled; fermionic isotopes
carry the isotope label only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import ATOMIC_MASS_UNIT, PLANCK, SPEED_OF_LIGHT

DIPOLE_ALLOWED = "dipole-allowed"
INTERCOMBINATION = "intercombination"
CLOCK = "clock"
_KINDS = (DIPOLE_ALLOWED, INTERCOMBINATION, CLOCK)

# Relative tolerance for the clock_frequency vs c/lambda consistency check.
CLOCK_FREQUENCY_RTOL = 5e-3


@dataclass(frozen=True)
class TransitionRecord:
    wavelength: float  # m
    natural_linewidth: float  # Hz (ordinary frequency, Gamma/2pi); 0 for clock lines
    kind: str

    def __post_init__(self) -> None:
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")
        if self.natural_linewidth < 0:
            raise ValueError(f"natural_linewidth must be >= 0, got {self.natural_linewidth}")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown transition kind {self.kind!r}")

    @property
    def angular_linewidth(self) -> float:
        """Decay rate Gamma in rad/s."""
        return 2 * math.pi * self.natural_linewidth

    @property
    def saturation_intensity(self) -> float:
        """Two-level saturation intensity pi*h*c*Gamma / (3*lambda^3), W/m^2."""
        return (
            math.pi
            * PLANCK
            * SPEED_OF_LIGHT
            * self.angular_linewidth
            / (3 * self.wavelength**3)
        )


@dataclass(frozen=True)
class SpeciesRecord:
    name: str
    mass: float  # kg
    clock_wavelength: float  # m
    cooling1: TransitionRecord
    cooling2: TransitionRecord
    lattice_magic_wavelength: float  # m
    repump_wavelengths: tuple[float, ...] = ()
    clock_frequency: float = 0.0  # Hz; 0 -> derive c/lambda

    def __post_init__(self) -> None:
        if self.mass <= 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        for lam in (self.clock_wavelength, self.lattice_magic_wavelength, *self.repump_wavelengths):
            if lam <= 0:
                raise ValueError(f"wavelengths must be > 0, got {lam}")
        derived = SPEED_OF_LIGHT / self.clock_wavelength
        if self.clock_frequency == 0.0:
            object.__setattr__(self, "clock_frequency", derived)
        elif abs(self.clock_frequency - derived) > CLOCK_FREQUENCY_RTOL * derived:
            raise ValueError(
                f"clock_frequency {self.clock_frequency} inconsistent with "
                f"c/clock_wavelength = {derived:.6e} beyond {CLOCK_FREQUENCY_RTOL:.1%}"
            )


def _sr(name: str, mass_u: float) -> SpeciesRecord:
    return SpeciesRecord(
        name=name,
        mass=mass_u * ATOMIC_MASS_UNIT,
        clock_wavelength=698e-9,
        cooling1=TransitionRecord(461e-9, 32e6, DIPOLE_ALLOWED),
        cooling2=TransitionRecord(689e-9, 7.4e3, INTERCOMBINATION),
        lattice_magic_wavelength=813e-9,
        repump_wavelengths=(679e-9, 707e-9),
    )


def _yb(name: str, mass_u: float) -> SpeciesRecord:
    return SpeciesRecord(
        name=name,
        mass=mass_u * ATOMIC_MASS_UNIT,
        clock_wavelength=578e-9,
        cooling1=TransitionRecord(399e-9, 29e6, DIPOLE_ALLOWED),
        cooling2=TransitionRecord(556e-9, 182e3, INTERCOMBINATION),
        lattice_magic_wavelength=759e-9,
        repump_wavelengths=(1389e-9,),
    )


def species_catalog() -> tuple[SpeciesRecord, ...]:
    """All supported isotopes. Immutable; repeated calls return equal records."""
    return (
        _sr("Sr88", 87.9056121),
        _sr("Sr87", 86.9088775),
        _yb("Yb171", 170.9363258),
        _yb("Yb174", 173.9388664),
    )


def get_species(name: str, overrides: dict | None = None) -> SpeciesRecord:
    """Look up one isotope by label, optionally overriding catalog constants.

    ``overrides`` maps SpeciesRecord field names to replacement values, e.g.
    an exact clock_frequency in place of the c/lambda default.
    """
    for record in species_catalog():
        if record.name == name:
            if overrides:
                return _apply_overrides(record, overrides)
            return record
    known = ", ".join(r.name for r in species_catalog())
    raise KeyError(f"unknown species {name!r}; catalog has {known}")


def _apply_overrides(record: SpeciesRecord, overrides: dict) -> SpeciesRecord:
    fields = {f: getattr(record, f) for f in record.__dataclass_fields__}
    for key, value in overrides.items():
        if key not in fields:
            raise KeyError(f"unknown species override {key!r}")
        if key in ("cooling1", "cooling2"):
            base = fields[key]
            sub = {f: getattr(base, f) for f in base.__dataclass_fields__}
            for k, v in value.items():
                if k not in sub:
                    raise KeyError(f"unknown transition override {key}.{k!r}")
                sub[k] = v
            fields[key] = TransitionRecord(**sub)
        elif key == "repump_wavelengths":
            fields[key] = tuple(value)
        else:
            fields[key] = value
    return SpeciesRecord(**fields)


def species_to_dict(record: SpeciesRecord) -> dict:
    """Serializable view of a catalog entry, for config echo and overrides."""
    def transition(t: TransitionRecord) -> dict:
        return {
            "wavelength": t.wavelength,
            "natural_linewidth": t.natural_linewidth,
            "kind": t.kind,
        }

    return {
        "name": record.name,
        "mass": record.mass,
        "clock_wavelength": record.clock_wavelength,
        "clock_frequency": record.clock_frequency,
        "cooling1": transition(record.cooling1),
        "cooling2": transition(record.cooling2),
        "lattice_magic_wavelength": record.lattice_magic_wavelength,
        "repump_wavelengths": list(record.repump_wavelengths),
    }
