"""Project-wide physical constants (SI) and temperature/energy unit bridges.

Every module takes its constants from here; nothing redefines them locally.
"""

SPEED_OF_LIGHT = 299792458.0  # m/s
PLANCK = 6.62607015e-34  # J s
HBAR = 1.054571817e-34  # J s
BOLTZMANN = 1.380649e-23  # J/K
STANDARD_GRAVITY = 9.80665  # m/s^2
BOHR_MAGNETON = 9.2740100783e-24  # J/T
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg


def temperature_to_energy(temperature_k: float) -> float:
    """Thermal energy k_B*T in joules. Rejects negative temperatures."""
    if temperature_k < 0:
        raise ValueError(f"temperature must be >= 0 K, got {temperature_k}")
    return BOLTZMANN * temperature_k


def energy_to_temperature(energy_j: float) -> float:
    """Exact inverse of :func:`temperature_to_energy`."""
    if energy_j < 0:
        raise ValueError(f"energy must be >= 0 J, got {energy_j}")
    return energy_j / BOLTZMANN
