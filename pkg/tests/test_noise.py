import json
import math

import numpy as np
import pytest

from latticeclock.allan import estimate_drift, overlapping_allan
from latticeclock.constants import SPEED_OF_LIGHT
from latticeclock.noise import (MAX_SAMPLES, FrequencyTrace, NoiseSpec,
                                flicker_floor_spec, read_trace, synthesize,
                                white_h0_for_sigma, write_trace)
from latticeclock.rng import RngStream


def test_zero_spec_gives_zero_trace():
    trace = synthesize(NoiseSpec(), 1000, 1.0, RngStream(1, 0))
    assert np.all(trace.samples == 0.0)


def test_determinism_and_stream_separation():
    spec = NoiseSpec(white_fm_h0=2e-30, flicker_fm_hm1=1e-31,
                     random_walk_hm2=1e-34, linear_drift=1e-16)
    a = synthesize(spec, 4096, 1.0, RngStream(42, 3))
    b = synthesize(spec, 4096, 1.0, RngStream(42, 3))
    c = synthesize(spec, 4096, 1.0, RngStream(42, 4))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_guards():
    with pytest.raises(ValueError):
        synthesize(NoiseSpec(), 0, 1.0, RngStream(1, 0))
    with pytest.raises(ValueError):
        synthesize(NoiseSpec(), MAX_SAMPLES + 1, 1.0, RngStream(1, 0))
    with pytest.raises(ValueError):
        synthesize(NoiseSpec(), 10, 0.0, RngStream(1, 0))
    with pytest.raises(ValueError):
        NoiseSpec(white_fm_h0=-1.0)


def test_drift_only_trace():
    """The 15 MHz/day repumper drift, converted to fractional units against
    the c/1389 nm carrier: 15e6 / 2.1583e14 per day = 8.0438e-13 per second."""
    carrier = SPEED_OF_LIGHT / 1389e-9
    assert carrier == pytest.approx(2.15833e14, rel=1e-5)
    per_day = 15e6 / carrier
    assert per_day == pytest.approx(6.949807923453498e-8, rel=1e-12)
    drift = per_day / 86400.0
    assert drift == pytest.approx(8.043759170663771e-13, rel=1e-12)
    trace = synthesize(NoiseSpec(linear_drift=drift), 500, 10.0, RngStream(2, 0))
    times = trace.times()
    assert np.allclose(trace.samples, drift * times, rtol=0, atol=0)
    assert estimate_drift(trace) == pytest.approx(drift, rel=1e-9)


def test_white_fm_level():
    h0 = white_h0_for_sigma(1e-15, 1.0)
    assert h0 == 2e-30
    trace = synthesize(NoiseSpec(white_fm_h0=h0), 200_000, 1.0, RngStream(3, 0))
    # per-sample std is sqrt(h0 / (2 dt))
    assert np.std(trace.samples) == pytest.approx(1e-15, rel=0.02)
    curve = overlapping_allan(trace, [1.0])
    assert curve.sigmas[0] == pytest.approx(1e-15, rel=0.20)


def test_flicker_floor_spec_values():
    spec = flicker_floor_spec(5e-16)
    assert spec.flicker_fm_hm1 == pytest.approx(1.8033688011112045e-31, rel=1e-12)
    assert spec.flicker_floor_sigma == 5e-16
    assert flicker_floor_spec(0.0).flicker_fm_hm1 == 0.0


def test_flicker_trace_plateaus_at_floor():
    floor = 5e-16
    trace = synthesize(flicker_floor_spec(floor), 2**18, 1.0, RngStream(4, 0))
    taus = [2.0**k for k in range(3, 12)]  # two decades, 8 s .. 2048 s
    curve = overlapping_allan(trace, taus)
    assert np.all(np.abs(curve.sigmas - floor) <= 0.3 * floor)


def test_random_walk_rises():
    trace = synthesize(NoiseSpec(random_walk_hm2=1e-32), 2**16, 1.0, RngStream(5, 0))
    curve = overlapping_allan(trace, [1.0, 16.0, 256.0])
    assert curve.sigmas[2] > curve.sigmas[1] > curve.sigmas[0]


def test_component_sum():
    # drift adds deterministically on top of the stochastic parts
    spec = NoiseSpec(white_fm_h0=2e-30)
    spec_with_drift = NoiseSpec(white_fm_h0=2e-30, linear_drift=1e-15)
    a = synthesize(spec, 1024, 1.0, RngStream(6, 0))
    b = synthesize(spec_with_drift, 1024, 1.0, RngStream(6, 0))
    assert np.allclose(b.samples - a.samples, 1e-15 * a.times())


def test_trace_validation():
    with pytest.raises(ValueError):
        FrequencyTrace(np.array([]), 1.0)
    with pytest.raises(ValueError):
        FrequencyTrace(np.array([1.0]), 0.0)


def test_trace_io_round_trip(tmp_path):
    spec = NoiseSpec(white_fm_h0=2e-30, linear_drift=1e-16)
    trace = synthesize(spec, 257, 1.5, RngStream(7, 2), label="io-test")
    path = tmp_path / "trace.csv"
    write_trace(trace, path, spec, header_note="scenario=test seed=7")
    loaded = read_trace(path)
    assert np.array_equal(loaded.samples, trace.samples)  # repr round-trip
    assert loaded.dt == trace.dt
    assert loaded.seed == 7 and loaded.stream_id == 2
    assert loaded.label == "io-test"
    sidecar = json.loads((tmp_path / "trace.json").read_text())
    assert sidecar["noise_spec"]["white_fm_h0"] == 2e-30
    assert sidecar["dt"] == 1.5


def test_read_trace_without_sidecar(tmp_path):
    trace = synthesize(NoiseSpec(linear_drift=1e-16), 10, 2.0, RngStream(8, 0))
    path = tmp_path / "bare.csv"
    write_trace(trace, path)
    (tmp_path / "bare.json").unlink()
    with pytest.raises(ValueError):
        read_trace(path)
    loaded = read_trace(path, dt=2.0)
    assert np.array_equal(loaded.samples, trace.samples)
