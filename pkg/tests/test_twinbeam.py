import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastlight.errors import InvalidParameterError
from fastlight.twinbeam import (BeamStats, TwinBeamSource, gain_for_squeezing,
                                intensity_difference_variance, seeded_stats,
                                squeezing_db)

from oracles import mc_twin_pair, photon_number

gains = st.floats(min_value=1.0, max_value=100.0)


def test_no_interaction_passes_seed_through():
    stats = seeded_stats(1.0, 1e6)
    assert stats.mean_p == 1e6
    assert stats.mean_c == 0.0
    assert stats.var_c == 0.0
    assert stats.cov_pc == 0.0


def test_seeded_stats_plug_in():
    stats = seeded_stats(2.0, 1e6)
    assert stats.mean_p == 2e6
    assert stats.mean_c == 1e6
    assert stats.var_p == 6e6
    assert stats.var_c == 3e6
    assert stats.cov_pc == 4e6


def test_seeded_stats_against_gaussian_field_mc():
    g1, n0, n = 2.0, 1e6, 2_000_000
    a_p, a_c = mc_twin_pair(g1, n0, n, seed=1234)
    n_p, n_c = photon_number(a_p), photon_number(a_c)
    stats = seeded_stats(g1, n0)
    se_mean_p = np.std(n_p) / np.sqrt(n)
    se_mean_c = np.std(n_c) / np.sqrt(n)
    assert abs(np.mean(n_p) - stats.mean_p) < 3 * se_mean_p
    assert abs(np.mean(n_c) - stats.mean_c) < 3 * se_mean_c
    assert abs(np.var(n_p) - stats.var_p) < 3 * stats.var_p * np.sqrt(2.0 / n)
    assert abs(np.var(n_c) - stats.var_c) < 3 * stats.var_c * np.sqrt(2.0 / n)
    cov = np.mean((n_p - n_p.mean()) * (n_c - n_c.mean()))
    assert abs(cov - stats.cov_pc) < 3 * stats.cov_pc * np.sqrt(2.0 / n)


@settings(max_examples=100, deadline=None)
@given(g1=gains, n0=st.floats(min_value=1.0, max_value=1e9))
def test_difference_variance_equals_seed_flux(g1, n0):
    stats = seeded_stats(g1, n0)
    assert intensity_difference_variance(stats) == pytest.approx(n0, rel=1e-9)


def test_difference_variance_coherent_reference():
    stats = BeamStats(mean_p=2e6, mean_c=1e6, var_p=2e6, var_c=1e6, cov_pc=0.0)
    assert intensity_difference_variance(stats) == 3e6


def test_difference_variance_zero_stats():
    assert intensity_difference_variance(
        BeamStats(mean_p=0.0, mean_c=0.0, var_p=0.0, var_c=0.0, cov_pc=0.0)) == 0.0


def test_squeezing_db_anchors():
    assert squeezing_db(1.0) == 0.0
    assert squeezing_db((10 ** 0.25 + 1) / 2) == pytest.approx(-2.5, abs=1e-12)
    assert squeezing_db(5.623) == pytest.approx(-10.1, abs=0.05)


def test_gain_for_squeezing_values():
    assert gain_for_squeezing(0.0) == 1.0
    assert gain_for_squeezing(-2.5) == pytest.approx((10 ** 0.25 + 1) / 2, rel=1e-12)
    assert gain_for_squeezing(-10.1) == pytest.approx(5.62, abs=0.01)
    with pytest.raises(InvalidParameterError):
        gain_for_squeezing(0.5)


@settings(max_examples=100, deadline=None)
@given(g1=gains)
def test_squeezing_round_trip(g1):
    assert gain_for_squeezing(squeezing_db(g1)) == pytest.approx(g1, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(g1=st.floats(min_value=1.0 + 1e-9, max_value=100.0))
def test_cauchy_schwarz_and_squeezing_exists(g1):
    stats = seeded_stats(g1, 1e6)
    assert abs(stats.cov_pc) <= np.sqrt(stats.var_p * stats.var_c)
    assert intensity_difference_variance(stats) < stats.mean_p + stats.mean_c


def test_beam_stats_validation():
    with pytest.raises(InvalidParameterError):
        BeamStats(mean_p=1.0, mean_c=1.0, var_p=-1.0, var_c=1.0, cov_pc=0.0)
    with pytest.raises(InvalidParameterError):
        BeamStats(mean_p=1.0, mean_c=1.0, var_p=1.0, var_c=1.0, cov_pc=2.0)


def test_source_validation():
    with pytest.raises(InvalidParameterError):
        TwinBeamSource(gain1=0.9, seed_flux=1e6)
    with pytest.raises(InvalidParameterError):
        TwinBeamSource(gain1=1.2, seed_flux=0.0)
    with pytest.raises(InvalidParameterError):
        seeded_stats(0.5, 1e6)
