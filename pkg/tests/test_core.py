import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticeclock.constants import (BOLTZMANN, SPEED_OF_LIGHT, energy_to_temperature,
                                    temperature_to_energy)
from latticeclock.rng import RngStream
from latticeclock.species import (SpeciesRecord, TransitionRecord, get_species,
                                  species_catalog, species_to_dict)


def test_catalog_has_all_isotopes():
    names = [r.name for r in species_catalog()]
    assert len(names) >= 4
    for expected in ("Sr88", "Sr87", "Yb171", "Yb174"):
        assert expected in names


def test_catalog_wavelengths():
    sr = get_species("Sr88")
    assert sr.cooling1.wavelength == 461e-9
    assert sr.cooling2.wavelength == 689e-9
    assert sr.lattice_magic_wavelength == 813e-9
    assert sr.clock_wavelength == 698e-9
    assert sr.repump_wavelengths == (679e-9, 707e-9)
    yb = get_species("Yb174")
    assert yb.cooling1.wavelength == 399e-9
    assert yb.cooling2.wavelength == 556e-9
    assert yb.lattice_magic_wavelength == 759e-9
    assert yb.clock_wavelength == 578e-9
    assert yb.repump_wavelengths == (1389e-9,)


def test_clock_frequency_defaults_to_c_over_lambda():
    sr = get_species("Sr88")
    derived = SPEED_OF_LIGHT / 698e-9
    assert sr.clock_frequency == derived
    assert abs(sr.clock_frequency - 4.295e14) / 4.295e14 < 5e-3


def test_catalog_immutable_and_repeatable():
    assert species_catalog() == species_catalog()
    sr = get_species("Sr88")
    with pytest.raises(Exception):
        sr.mass = 1.0  # frozen dataclass


def test_positivity_invariants():
    for r in species_catalog():
        assert r.mass > 0
        for lam in (r.clock_wavelength, r.lattice_magic_wavelength,
                    r.cooling1.wavelength, r.cooling2.wavelength,
                    *r.repump_wavelengths):
            assert lam > 0
        assert r.cooling1.natural_linewidth >= 0
        assert r.cooling2.natural_linewidth >= 0


def test_invalid_records_rejected():
    with pytest.raises(ValueError):
        TransitionRecord(-461e-9, 32e6, "dipole-allowed")
    with pytest.raises(ValueError):
        TransitionRecord(461e-9, -1.0, "dipole-allowed")
    with pytest.raises(ValueError):
        TransitionRecord(461e-9, 32e6, "magic")
    sr = get_species("Sr88")
    with pytest.raises(ValueError):
        SpeciesRecord("bad", -1.0, 698e-9, sr.cooling1, sr.cooling2, 813e-9)


def test_clock_frequency_consistency_gate():
    # an override within 0.5% of c/lambda is accepted, beyond it is rejected
    exact = 429_228_066_418_012.0
    sr = get_species("Sr88", overrides={"clock_frequency": exact})
    assert sr.clock_frequency == exact
    with pytest.raises(ValueError):
        get_species("Sr88", overrides={"clock_frequency": 4.5e14})


def test_unknown_species_and_override_rejected():
    with pytest.raises(KeyError):
        get_species("Cs133")
    with pytest.raises(KeyError):
        get_species("Sr88", overrides={"clock_lambda": 1.0})


def test_saturation_intensity_positive_and_scales():
    sr = get_species("Sr88")
    assert sr.cooling1.saturation_intensity > sr.cooling2.saturation_intensity > 0


def test_species_to_dict_round_trip():
    sr = get_species("Sr88")
    d = species_to_dict(sr)
    rebuilt = get_species("Sr88", overrides={
        "mass": d["mass"], "clock_frequency": d["clock_frequency"]})
    assert rebuilt == sr


def test_temperature_energy_examples():
    assert temperature_to_energy(0.0) == 0.0
    assert temperature_to_energy(2e-6) == pytest.approx(2.761298e-29, rel=1e-6)
    assert energy_to_temperature(temperature_to_energy(5e-6)) == 5e-6
    with pytest.raises(ValueError):
        temperature_to_energy(-1e-9)
    with pytest.raises(ValueError):
        energy_to_temperature(-1.0)


@given(st.floats(min_value=1e-12, max_value=1e4))
def test_temperature_energy_round_trip(t):
    assert energy_to_temperature(temperature_to_energy(t)) == pytest.approx(
        t, rel=1e-15, abs=0)


def test_rng_reproducibility():
    a = RngStream(12345, 7).generator().standard_normal(100)
    b = RngStream(12345, 7).generator().standard_normal(100)
    assert np.array_equal(a, b)


def test_rng_streams_independent():
    a = RngStream(12345, 0).generator().standard_normal(100)
    b = RngStream(12345, 1).generator().standard_normal(100)
    assert not np.array_equal(a, b)
    assert RngStream(1, 0).derive(5) == RngStream(1, 5)


def test_rng_seed_range():
    with pytest.raises(ValueError):
        RngStream(-1, 0)
    with pytest.raises(ValueError):
        RngStream(2**64, 0)
    with pytest.raises(ValueError):
        RngStream(1, -2)


@given(st.integers(min_value=0, max_value=2**64 - 1),
       st.integers(min_value=0, max_value=2**16))
def test_rng_determinism_property(seed, stream):
    x = RngStream(seed, stream).generator().random(4)
    y = RngStream(seed, stream).generator().random(4)
    assert np.array_equal(x, y)
