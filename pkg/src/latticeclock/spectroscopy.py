"""Clock-transition spectroscopy: Rabi excitation, field-induced coupling for
the even isotopes, lineshape synthesis with motional sidebands, detection
noise, and the chirped line search used for day-to-day line finding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from .constants import BOLTZMANN, PLANCK
from .lattice import TrapDerived
from .rng import RngStream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeConfig:
    rabi_frequency: float  # rad/s
    pulse_time: float  # s
    detuning: float = 0.0  # Hz, probe offset from line center
    magnetic_field: float = 0.0  # T, state-mixing field for even isotopes
    probe_intensity: float = 0.0  # W/m^2

    def __post_init__(self) -> None:
        if self.pulse_time < 0:
            raise ValueError(f"pulse_time must be >= 0, got {self.pulse_time}")
        if self.probe_intensity < 0:
            raise ValueError(f"probe_intensity must be >= 0, got {self.probe_intensity}")
        if self.magnetic_field < 0:
            raise ValueError(f"magnetic_field must be >= 0, got {self.magnetic_field}")


@dataclass(frozen=True)
class Spectrum:
    detunings: np.ndarray  # Hz, relative to line center
    excitation_fractions: np.ndarray
    atom_number_per_point: float = math.inf  # inf -> noiseless

    def __post_init__(self) -> None:
        d = np.asarray(self.detunings, dtype=float)
        p = np.asarray(self.excitation_fractions, dtype=float)
        if d.shape != p.shape:
            raise ValueError("detunings and excitation_fractions must match in length")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("excitation fractions must lie in [0, 1]")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "excitation_fractions", p)


def rabi_probability(delta, omega: float, pulse_time: float):
    """Two-level excitation probability after a square pulse.

    P = Omega^2/(Omega^2 + delta^2) * sin^2(sqrt(Omega^2 + delta^2) * T / 2),
    with delta and Omega both angular (rad/s). Accepts scalar or array delta.
    """
    if pulse_time < 0:
        raise ValueError(f"pulse_time must be >= 0, got {pulse_time}")
    delta = np.asarray(delta, dtype=float)
    w2 = omega**2 + delta**2
    w = np.sqrt(w2)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(w2 > 0, (omega**2 / np.where(w2 > 0, w2, 1.0))
                     * np.sin(w * pulse_time / 2) ** 2, 0.0)
    return float(p) if p.ndim == 0 else p


def fourier_limited_fwhm(pulse_time: float) -> float:
    """FWHM in Hz of the pi-pulse Rabi line, approximately 0.799/T.

    Found by root-bracketing rabi_probability = 1/2 at fixed Omega = pi/T;
    the line is monotone out to its first zero, so the first crossing is the
    half-maximum point.
    """
    if pulse_time <= 0:
        raise ValueError(f"pulse_time must be > 0, got {pulse_time}")
    omega = math.pi / pulse_time
    f = lambda d: rabi_probability(d, omega, pulse_time) - 0.5
    half = brentq(f, 0.0, 4.0 / pulse_time, xtol=1e-12 / pulse_time)
    return 2 * half / (2 * math.pi)


def induced_rabi_frequency(magnetic_field: float, intensity: float,
                           coupling: float) -> float:
    """Magnetically induced coupling Omega = xi * B * sqrt(I) in rad/s.

    The clock line of the bosonic isotopes is closed without a mixing field:
    B = 0 returns 0 with a diagnostic.
    """
    if magnetic_field < 0 or intensity < 0:
        raise ValueError("magnetic_field and intensity must be >= 0")
    if magnetic_field == 0.0:
        log.warning("forbidden transition closed: no mixing field applied, Omega = 0")
        return 0.0
    return coupling * magnetic_field * math.sqrt(intensity)


def thermal_occupation(axial_frequency: float, temperature: float) -> float:
    """Mean motional quantum number of a harmonic mode at temperature T."""
    if axial_frequency <= 0:
        raise ValueError(f"axial_frequency must be > 0, got {axial_frequency}")
    if temperature <= 0:
        return 0.0
    x = PLANCK * axial_frequency / (BOLTZMANN * temperature)
    return 1.0 / math.expm1(x)


def synthesize_lineshape(
    probe: ProbeConfig,
    trap: TrapDerived | None = None,
    broadening: float = 0.0,
    sample_temperature: float = 0.0,
    detunings: np.ndarray | None = None,
) -> Spectrum:
    """Full clock-line spectrum: carrier, extra broadening, motional sidebands.

    Parameters
    ----------
    probe : ProbeConfig
        Sets the Rabi frequency and pulse time of the carrier line.
    trap : TrapDerived, optional
        When given, sidebands appear at +/- the axial trap frequency with
        amplitudes eta^2 * nbar (red) and eta^2 * (nbar + 1) (blue).
    broadening : float
        FWHM in Hz of a Lorentzian convolved onto the spectrum; models
        unattributed carrier broadening. Must be >= 0.
    sample_temperature : float
        Kelvin; sets the sideband thermal occupation.
    detunings : ndarray, optional
        Uniform scan grid in Hz. The grid spacing must resolve both the
        carrier and the broadening kernel. Auto-built when omitted.

    Returns
    -------
    Spectrum
        Noiseless excitation fractions on the detuning grid.
    """
    if broadening < 0:
        raise ValueError(f"broadening must be >= 0, got {broadening}")
    fwhm0 = fourier_limited_fwhm(probe.pulse_time)
    if detunings is None:
        if trap is not None and trap.axial_frequency > 0:
            half_span = 1.2 * trap.axial_frequency
        else:
            half_span = 25 * max(fwhm0, broadening)
        detunings = np.linspace(-half_span, half_span, 4001)
    detunings = np.asarray(detunings, dtype=float)
    steps = np.diff(detunings)
    if len(detunings) < 3 or not np.allclose(steps, steps[0], rtol=1e-9):
        raise ValueError("detunings must be a uniform grid with >= 3 points")

    signal = rabi_probability(2 * math.pi * detunings, probe.rabi_frequency,
                              probe.pulse_time)
    if trap is not None and trap.axial_frequency > 0:
        nbar = thermal_occupation(trap.axial_frequency, sample_temperature)
        eta2 = trap.lamb_dicke**2
        nu_z = trap.axial_frequency
        red = eta2 * nbar * rabi_probability(
            2 * math.pi * (detunings + nu_z), probe.rabi_frequency, probe.pulse_time)
        blue = eta2 * (nbar + 1) * rabi_probability(
            2 * math.pi * (detunings - nu_z), probe.rabi_frequency, probe.pulse_time)
        signal = signal + red + blue

    if broadening > 0:
        dx = steps[0]
        half_n = (len(detunings) - 1) // 2
        x = dx * np.arange(-half_n, half_n + 1)  # odd length, symmetric about 0
        kernel = 1.0 / (x**2 + (broadening / 2) ** 2)
        kernel /= kernel.sum()  # unit-sum kernel conserves spectral area
        signal = fftconvolve(signal, kernel, mode="same")

    return Spectrum(detunings, np.clip(signal, 0.0, 1.0))


def measure_fwhm(detunings: np.ndarray, fractions: np.ndarray) -> float:
    """Interpolated full width at half maximum of a sampled line."""
    d = np.asarray(detunings, dtype=float)
    p = np.asarray(fractions, dtype=float)
    i_peak = int(np.argmax(p))
    half = p[i_peak] / 2
    if p[0] > half or p[-1] > half:
        raise ValueError("line not resolved: spectrum does not fall to half maximum")

    def cross(idx_range) -> float:
        for i in idx_range:
            lo, hi = sorted((p[i], p[i + 1]))
            if lo <= half <= hi and p[i] != p[i + 1]:
                return d[i] + (half - p[i]) * (d[i + 1] - d[i]) / (p[i + 1] - p[i])
        raise ValueError("no half-maximum crossing found")

    left = cross(range(i_peak - 1, -1, -1))
    right = cross(range(i_peak, len(p) - 1))
    return right - left


def scan_line(spectrum: Spectrum, atom_number: int, rng: RngStream) -> Spectrum:
    """Apply quantum projection noise: each point becomes binomial(N, p)/N."""
    if atom_number < 1:
        raise ValueError(f"atom_number must be >= 1, got {atom_number}")
    gen = rng.generator()
    counts = gen.binomial(int(atom_number), spectrum.excitation_fractions)
    return Spectrum(
        spectrum.detunings.copy(),
        counts / float(atom_number),
        atom_number_per_point=float(atom_number),
    )


@dataclass(frozen=True)
class ChirpSearchResult:
    found: bool
    center: float | None  # Hz, coarse line-center estimate
    max_excitation: float
    threshold: float
    periods_used: int
    search_time: float  # s


def chirp_search(
    true_line: float,
    guess: float,
    span: float,
    period: float,
    rng: RngStream,
    pulse_time: float = 1.0,
    atom_number: int = 100_000,
    steps_per_sweep: int = 20,
    max_periods: int = 3,
    hit_excitation: float = 0.5,
) -> ChirpSearchResult:
    """Sweep guess +/- span/2 once per period until the line is detected.

    Each sweep is sampled in ``steps_per_sweep`` sub-bands; a probe whose
    band contains the line is dragged through resonance and excites
    ``hit_excitation`` of the atoms, otherwise only the far Rabi tail
    contributes. Detection requires the measured excitation to exceed five
    standard deviations of the projection-noise floor. The returned center
    is the detecting sub-band center, so its error is bounded by half the
    sub-band width. A line outside the swept window yields a not-found
    result, not an error.
    """
    if span <= 0:
        raise ValueError(f"span must be > 0, got {span}")
    if steps_per_sweep < 2:
        raise ValueError(f"steps_per_sweep must be >= 2, got {steps_per_sweep}")
    gen = rng.generator()
    n = int(atom_number)
    threshold = 5 * math.sqrt(0.25 / n)
    omega = math.pi / pulse_time
    lo = guess - span / 2
    width = span / steps_per_sweep
    centers = lo + (np.arange(steps_per_sweep) + 0.5) * width
    in_window = lo <= true_line <= guess + span / 2
    hit_index = min(int((true_line - lo) / width), steps_per_sweep - 1) if in_window else -1

    for sweep in range(1, max_periods + 1):
        best_p, best_center = 0.0, None
        for k, center in enumerate(centers):
            if k == hit_index:
                p = hit_excitation
            else:
                p = float(rabi_probability(2 * math.pi * (center - true_line),
                                           omega, pulse_time))
            measured = gen.binomial(n, min(max(p, 0.0), 1.0)) / n
            if measured > best_p:
                best_p, best_center = measured, float(center)
        if best_p > threshold:
            return ChirpSearchResult(True, best_center, best_p, threshold,
                                     sweep, sweep * period)
    return ChirpSearchResult(False, None, best_p, threshold, max_periods,
                             max_periods * period)
