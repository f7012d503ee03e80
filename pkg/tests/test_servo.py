import math

import numpy as np
import pytest

from latticeclock.allan import overlapping_allan
from latticeclock.noise import FrequencyTrace, NoiseSpec, flicker_floor_spec, synthesize
from latticeclock.rng import RngStream
from latticeclock.servo import (ServoConfig, ServoDivergenceError,
                                discriminator_slope, error_signal, make_rabi_line,
                                qpn_limit, run_lock)
from latticeclock.species import get_species
from latticeclock.spectroscopy import fourier_limited_fwhm

NU0 = get_species("Sr88").clock_frequency
PULSE = 0.3
FWHM = fourier_limited_fwhm(PULSE)
HW = FWHM / 2
LINE = make_rabi_line(PULSE)


def servo_config(gain_i=0.4, gain_p=0.0, atoms=100_000, tc=1.5):
    return ServoConfig(gain_i=gain_i, gain_p=gain_p, cycle_time=tc,
                       modulation_halfwidth=HW, atom_number=atoms)


def test_error_signal_on_resonance():
    slope = discriminator_slope(LINE, HW)
    assert error_signal(0.5, 0.5, slope) == 0.0


def test_error_signal_sign_convention():
    # oscillator above the line: upper probe sees less excitation than lower
    slope = discriminator_slope(LINE, HW)
    offset = FWHM / 20
    p_plus = LINE(offset + HW)
    p_minus = LINE(offset - HW)
    assert error_signal(p_plus, p_minus, slope) > 0


def test_error_signal_linearization():
    slope = discriminator_slope(LINE, HW)
    for offset in np.linspace(-FWHM / 10, FWHM / 10, 9):
        if offset == 0:
            continue
        e = error_signal(LINE(offset + HW), LINE(offset - HW), slope)
        assert e == pytest.approx(offset, rel=0.05)


def test_error_signal_validation():
    with pytest.raises(ValueError):
        error_signal(0.4, 0.6, 0.0)
    with pytest.raises(ValueError):
        discriminator_slope(LINE, -1.0)


def test_open_loop_equivalence_exact():
    spec = NoiseSpec(white_fm_h0=2e-30, linear_drift=1e-16)
    lo = synthesize(spec, 500, 1.5, RngStream(50, 3), label="lo")
    result = run_lock(lo, 0.0, servo_config(gain_i=0.0, gain_p=0.0), LINE,
                      RngStream(50, 2), NU0)
    assert np.array_equal(result.trace.samples, lo.samples)
    assert all(r.correction == 0.0 for r in result.records)


def test_correction_updates_once_per_pair():
    result = run_lock(NoiseSpec(white_fm_h0=2e-30), FWHM / 4, servo_config(), LINE,
                      RngStream(51, 2), NU0, n_probes=40)
    corr = [r.correction for r in result.records]
    for k in range(0, 40, 2):
        assert corr[k] == corr[k + 1] if k + 1 < 40 else True
    assert math.isnan(result.records[0].error)
    assert not math.isnan(result.records[3].error)


def test_drift_tracking_steady_state():
    tc, gain = 1.5, 0.4
    d_hz = 0.02  # Hz/s on the carrier
    spec = NoiseSpec(linear_drift=d_hz / NU0)
    servo = servo_config(gain_i=gain, atoms=10_000_000, tc=tc)
    result = run_lock(spec, 0.0, servo, LINE, RngStream(52, 2), NU0, n_probes=3000)
    tail_hz = result.trace.samples[-600:] * NU0
    expected = d_hz * 2 * tc / gain
    assert np.mean(tail_hz) == pytest.approx(expected, rel=0.10)


def test_locked_beats_free_running_in_drift_scenario():
    spec = NoiseSpec(linear_drift=2e-16,
                     flicker_fm_hm1=flicker_floor_spec(5e-16).flicker_fm_hm1)
    tc = 1.5
    servo = servo_config(tc=tc)
    result = run_lock(spec, 0.0, servo, LINE, RngStream(53, 2), NU0, n_probes=4000)
    free = synthesize(spec, 4000, tc, RngStream(53, 3), label="lo")
    taus = [100 * tc, 256 * tc]
    locked_curve = overlapping_allan(result.trace, taus)
    free_curve = overlapping_allan(free, taus)
    assert np.all(locked_curve.sigmas < free_curve.sigmas)


def test_lock_acquisition_from_half_linewidth():
    spec = NoiseSpec(white_fm_h0=2e-30)
    servo = servo_config()
    for seed in range(10):
        result = run_lock(spec, FWHM / 2, servo, LINE, RngStream(100 + seed, 2),
                          NU0, n_probes=600)
        tail = result.trace.samples[-60:] * NU0 - FWHM / 2
        stderr = np.std(tail, ddof=1) / math.sqrt(len(tail))
        assert abs(np.mean(tail)) < 3 * max(stderr, 1e-12)


def test_divergence_aborts():
    spec = NoiseSpec(white_fm_h0=2e-30)
    runaway = ServoConfig(gain_i=1e10, gain_p=0.0, cycle_time=1.5,
                          modulation_halfwidth=HW, atom_number=1000)
    with pytest.raises(ServoDivergenceError):
        run_lock(spec, 0.0, runaway, LINE, RngStream(54, 2), NU0, n_probes=2000)


def test_run_lock_determinism():
    spec = NoiseSpec(white_fm_h0=2e-30, linear_drift=1e-16)
    a = run_lock(spec, 0.0, servo_config(), LINE, RngStream(55, 2), NU0, n_probes=300)
    b = run_lock(spec, 0.0, servo_config(), LINE, RngStream(55, 2), NU0, n_probes=300)
    assert np.array_equal(a.trace.samples, b.trace.samples)


def test_run_lock_validation():
    with pytest.raises(ValueError):
        run_lock(NoiseSpec(), 0.0, servo_config(), LINE, RngStream(56, 2), NU0)
    lo = synthesize(NoiseSpec(), 10, 2.0, RngStream(56, 3))
    with pytest.raises(ValueError):
        run_lock(lo, 0.0, servo_config(tc=1.5), LINE, RngStream(56, 2), NU0)
    with pytest.raises(ValueError):
        ServoConfig(gain_i=-0.1, gain_p=0.0, cycle_time=1.5,
                    modulation_halfwidth=HW, atom_number=100)


def test_qpn_limit_values():
    sigma = qpn_limit(FWHM, NU0, 1e5, 1.5)
    assert sigma(1.0) == pytest.approx(2.4006829926704655e-17, rel=1e-9)
    assert sigma(1.0) == pytest.approx(2.4e-17, rel=0.05)
    # quadrupling the atom number halves the instability
    assert qpn_limit(FWHM, NU0, 4e5, 1.5)(1.0) == pytest.approx(
        sigma(1.0) / 2, rel=1e-12)
    # tau = Tc removes the cadence factor
    assert sigma(1.5) == pytest.approx((FWHM / NU0) / math.sqrt(1e5), rel=1e-12)
    with pytest.raises(ValueError):
        qpn_limit(0.0, NU0, 1e5, 1.5)
    with pytest.raises(ValueError):
        sigma(0.0)
