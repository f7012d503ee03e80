"""Frequency-stability analysis: overlapping Allan deviation, power-law fits,
drift estimation, and two-clock comparison statistics.

The overlapping Allan deviation is the single estimator used throughout; it
distinguishes every noise type in scope (white FM falls as tau^-1/2, flicker
FM plateaus, random walk rises as tau^+1/2, drift as tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .noise import FrequencyTrace

CURVE_SCHEMA = "latticeclock/stability-curve/1"


@dataclass(frozen=True)
class StabilityCurve:
    taus: np.ndarray  # s, strictly increasing
    sigmas: np.ndarray  # Allan deviation, dimensionless
    counts: np.ndarray  # estimator terms per point

    def __post_init__(self) -> None:
        taus = np.asarray(self.taus, dtype=float)
        sigmas = np.asarray(self.sigmas, dtype=float)
        counts = np.asarray(self.counts, dtype=int)
        if not (len(taus) == len(sigmas) == len(counts)):
            raise ValueError("taus, sigmas and counts must have equal length")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("taus must be strictly increasing")
        if np.any(sigmas < 0) or np.any(counts < 1):
            raise ValueError("sigmas must be >= 0 and counts >= 1")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "counts", counts)


def octave_taus(trace: FrequencyTrace) -> list[float]:
    """Default averaging-time grid: octave spaced from dt up to n*dt/4."""
    taus = []
    m = 1
    while m <= len(trace) // 4:
        taus.append(m * trace.dt)
        m *= 2
    return taus


def overlapping_allan(trace: FrequencyTrace, taus) -> StabilityCurve:
    """Overlapping Allan deviation of a fractional-frequency trace.

    For tau = m*dt, sigma_y^2(tau) = sum (ybar_{i+m} - ybar_i)^2 / (2(N-2m))
    over all N-2m overlapping windows, with ybar_i the m-sample average
    starting at i. Each tau must be an integer multiple of dt; taus too long
    for at least three non-overlapping segments are dropped per-point.
    """
    y = trace.samples - trace.samples[0]  # offset-invariant; conditions the cumsum
    n = len(y)
    cum = np.concatenate([[0.0], np.cumsum(y)])
    out_taus, out_sigmas, out_counts = [], [], []
    for tau in sorted(set(float(t) for t in taus)):
        m = tau / trace.dt
        m_int = int(round(m))
        if m_int < 1 or abs(m - m_int) > 1e-9 * max(m, 1.0):
            raise ValueError(f"tau = {tau} is not an integer multiple of dt = {trace.dt}")
        if 3 * m_int > n:
            continue  # fewer than 3 non-overlapping segments
        averages = (cum[m_int:] - cum[:-m_int]) / m_int
        diffs = averages[m_int:] - averages[:-m_int]
        out_taus.append(m_int * trace.dt)
        out_sigmas.append(math.sqrt(float(np.mean(diffs**2)) / 2))
        out_counts.append(len(diffs))
    if not out_taus:
        raise ValueError("no tau in range: trace too short for every requested tau")
    return StabilityCurve(np.asarray(out_taus), np.asarray(out_sigmas),
                          np.asarray(out_counts))


def fit_powerlaw(curve: StabilityCurve, tau_range: tuple[float, float]
                 ) -> tuple[float, float]:
    """Least-squares fit sigma(tau) = amplitude * tau**exponent in log-log space.

    Returns (amplitude at tau = 1 s, exponent). Needs at least three points
    with positive sigma inside tau_range.
    """
    lo, hi = tau_range
    mask = (curve.taus >= lo) & (curve.taus <= hi)
    if np.count_nonzero(mask) < 3:
        raise ValueError(f"need >= 3 points in range {tau_range}, got {mask.sum()}")
    if np.any(curve.sigmas[mask] <= 0):
        raise ValueError("non-positive sigma inside the fit range")
    log_tau = np.log(curve.taus[mask])
    log_sig = np.log(curve.sigmas[mask])
    exponent, log_amp = np.polyfit(log_tau, log_sig, 1)
    return float(np.exp(log_amp)), float(exponent)


def compare_clocks(a: FrequencyTrace, b: FrequencyTrace,
                   taus=None) -> tuple[FrequencyTrace, StabilityCurve]:
    """Samplewise difference of two clocks and the stability of the difference.

    Traces must share dt; lengths are truncated to the shorter one. For two
    independent, statistically identical clocks the per-clock instability is
    the reported curve divided by sqrt(2).
    """
    if a.dt != b.dt:
        raise ValueError(f"dt mismatch: {a.dt} vs {b.dt}")
    n = min(len(a), len(b))
    diff = FrequencyTrace(a.samples[:n] - b.samples[:n], a.dt,
                          label=f"diff({a.label},{b.label})")
    if taus is None:
        taus = octave_taus(diff)
    return diff, overlapping_allan(diff, taus)


def estimate_drift(trace: FrequencyTrace) -> float:
    """Least-squares linear slope of y versus time, in fractional/s."""
    if len(trace) < 2:
        raise ValueError("need at least 2 samples to estimate a drift")
    t = trace.times()
    design = np.column_stack([np.ones_like(t), t])
    (_, slope), *_ = np.linalg.lstsq(design, trace.samples, rcond=None)
    return float(slope)


def write_curve(curve: StabilityCurve, path: str | Path,
                header_note: str = "") -> None:
    """Persist a stability curve as (tau_s, sigma_y, count) CSV."""
    with open(Path(path), "w") as f:
        if header_note:
            f.write(f"# {header_note}\n")
        f.write("tau_s,sigma_y,count\n")
        for tau, sigma, count in zip(curve.taus, curve.sigmas, curve.counts):
            f.write(f"{float(tau)!r},{float(sigma)!r},{int(count)}\n")
