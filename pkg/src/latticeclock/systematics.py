"""Systematic frequency shifts and the fractional uncertainty budget.

Coefficients the project measures rather than predicts (black-body
coefficient, quadratic Zeeman coefficient, density coefficient) are config
values sourced from external literature and labeled as such in the scenario
files; nothing here hard-codes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Mission accuracy goal, total fractional uncertainty.
ACCURACY_GOAL = 5e-17


@dataclass(frozen=True)
class ShiftEntry:
    name: str
    shift: float  # Hz
    uncertainty: float  # Hz
    fractional_shift: float
    fractional_uncertainty: float

    def __post_init__(self) -> None:
        if self.uncertainty < 0:
            raise ValueError(f"uncertainty must be >= 0, got {self.uncertainty}")


def make_entry(name: str, shift: float, uncertainty: float,
               clock_frequency: float) -> ShiftEntry:
    """Build an entry with the fractional columns derived from nu0."""
    if clock_frequency <= 0:
        raise ValueError(f"clock_frequency must be > 0, got {clock_frequency}")
    return ShiftEntry(name, shift, uncertainty, shift / clock_frequency,
                      uncertainty / clock_frequency)


@dataclass(frozen=True)
class BbrModel:
    coefficient: float  # Hz at the reference temperature; literature value
    reference_temperature: float = 300.0  # K

    def __post_init__(self) -> None:
        if self.reference_temperature <= 0:
            raise ValueError(
                f"reference_temperature must be > 0, got {self.reference_temperature}"
            )


def bbr_shift(temperature: float, model: BbrModel) -> float:
    """Black-body shift kappa * (T/T_ref)^4."""
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    return model.coefficient * (temperature / model.reference_temperature) ** 4


def bbr_sensitivity(temperature: float, model: BbrModel) -> float:
    """d(shift)/dT = 4 kappa T^3 / T_ref^4, in Hz/K."""
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    return 4 * model.coefficient * temperature**3 / model.reference_temperature**4


def two_tube_differential(t1: float, t2: float, model: BbrModel) -> float:
    """Differential shift between two black-body tubes at T1 and T2."""
    return bbr_shift(t1, model) - bbr_shift(t2, model)


def invert_bbr_coefficient(measured_differential: float, t1: float, t2: float,
                           reference_temperature: float = 300.0) -> float:
    """Recover kappa from a measured two-tube differential (exact inverse).

    kappa = delta * T_ref^4 / (T1^4 - T2^4); equal tube temperatures leave
    the coefficient undetermined.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("tube temperatures must be > 0")
    if t1 == t2:
        raise ValueError("degenerate inversion: equal tube temperatures carry "
                         "no information about the coefficient")
    return measured_differential * reference_temperature**4 / (t1**4 - t2**4)


def quadratic_zeeman(field: float, coefficient: float) -> float:
    """Second-order Zeeman shift beta * B^2, in Hz."""
    return coefficient * field**2


def quadratic_zeeman_uncertainty(field: float, coefficient: float,
                                 field_uncertainty: float) -> float:
    """Propagated |2 beta B dB|, in Hz."""
    if field_uncertainty < 0:
        raise ValueError(f"field_uncertainty must be >= 0, got {field_uncertainty}")
    return abs(2 * coefficient * field * field_uncertainty)


def density_shift(atom_number: float, trap_volume: float, coefficient: float) -> float:
    """Cold-collision shift coefficient * N / V, in Hz."""
    if trap_volume <= 0:
        raise ValueError(f"trap_volume must be > 0, got {trap_volume}")
    if atom_number < 0:
        raise ValueError(f"atom_number must be >= 0, got {atom_number}")
    return coefficient * atom_number / trap_volume


@dataclass(frozen=True)
class BudgetResult:
    entries: tuple[ShiftEntry, ...]
    total_fractional_shift: float
    total_fractional_uncertainty: float  # root sum of squares
    goal: float
    passed: bool


def total_budget(entries: list[ShiftEntry], clock_frequency: float,
                 goal: float = ACCURACY_GOAL) -> BudgetResult:
    """Combine entries: shifts add linearly, uncertainties in quadrature.

    The budget passes when the total fractional uncertainty beats the goal.
    """
    if not entries:
        raise ValueError("budget needs at least one entry")
    if clock_frequency <= 0:
        raise ValueError(f"clock_frequency must be > 0, got {clock_frequency}")
    total_shift = sum(e.shift for e in entries) / clock_frequency
    rss = math.sqrt(sum((e.uncertainty / clock_frequency) ** 2 for e in entries))
    return BudgetResult(tuple(entries), total_shift, rss, goal, rss < goal)


def format_budget_table(result: BudgetResult) -> str:
    """Aligned plain-text budget table for reports."""
    header = f"{'shift':24s} {'value_hz':>14s} {'unc_hz':>12s} {'fractional':>12s} {'frac_unc':>12s}"
    lines = [header, "-" * len(header)]
    for e in result.entries:
        lines.append(
            f"{e.name:24s} {e.shift:>14.6g} {e.uncertainty:>12.4g} "
            f"{e.fractional_shift:>12.4g} {e.fractional_uncertainty:>12.4g}"
        )
    lines.append("-" * len(header))
    lines.append(
        f"{'total':24s} {'':>14s} {'':>12s} {result.total_fractional_shift:>12.4g} "
        f"{result.total_fractional_uncertainty:>12.4g}"
    )
    verdict = "PASS" if result.passed else "FAIL"
    lines.append(f"goal {result.goal:.1e} fractional uncertainty: {verdict}")
    return "\n".join(lines)
