import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.exceptions import DomainError, SignalLengthError
from app.services.features.wavelet import (
    db8_filters,
    dwt_db8,
    idwt_db8,
    subband_names,
    subband_stats,
    wavelet_features,
)


def test_db8_filter_identities():
    h, g = db8_filters()
    assert h.shape == (16,)
    assert np.sum(h) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert np.sum(h * h) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(g) == pytest.approx(0.0, abs=1e-12)
    for shift in range(2, 16, 2):
        assert np.dot(h[shift:], h[:-shift]) == pytest.approx(0.0, abs=1e-12)


def test_subband_lengths_halve():
    decomposition = dwt_db8(np.random.default_rng(0).standard_normal(3200))
    assert [len(d) for d in decomposition.details] == [1600, 800, 400, 200, 100]
    assert len(decomposition.approximation) == 100
    assert decomposition.levels == 5


def test_zero_signal_has_zero_coefficients():
    decomposition = dwt_db8(np.zeros(1024))
    assert all(np.all(d == 0) for d in decomposition.details)
    assert np.all(decomposition.approximation == 0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_energy_and_reconstruction(seed):
    x = np.random.default_rng(seed).standard_normal(1024)
    decomposition = dwt_db8(x)
    bands = decomposition.details + [decomposition.approximation]
    energy = sum(float(np.sum(b * b)) for b in bands)
    assert energy == pytest.approx(float(np.sum(x * x)), rel=1e-8)
    np.testing.assert_allclose(idwt_db8(decomposition), x, atol=1e-10)


def test_unaligned_length_is_padded_periodically():
    x = np.random.default_rng(5).standard_normal(1000)
    decomposition = dwt_db8(x)
    assert decomposition.original_length == 1000
    assert decomposition.padded_length == 1024
    np.testing.assert_allclose(idwt_db8(decomposition), x, atol=1e-10)


def test_too_short_for_five_levels():
    with pytest.raises(SignalLengthError):
        dwt_db8(np.ones(31))


class TestSubbandStats:
    def test_constant_sequence(self):
        stats = subband_stats(np.ones(4))
        np.testing.assert_allclose(stats.as_array(), [1, 0, 4, 4, 0, 0])

    def test_alternating_sequence(self):
        stats = subband_stats(np.array([1.0, -1.0, 1.0, -1.0]))
        np.testing.assert_allclose(stats.as_array(), [0, 1, 4, 4, 0, -2], atol=1e-12)

    def test_gaussian_moments(self):
        stats = subband_stats(np.random.default_rng(42).standard_normal(1_000_000))
        assert stats.skewness == pytest.approx(0.0, abs=0.01)
        assert stats.kurtosis == pytest.approx(0.0, abs=0.02)

    def test_empty(self):
        with pytest.raises(DomainError):
            subband_stats(np.array([]))

    @pytest.mark.parametrize("c", [0.01, 3.0, -2.0])
    def test_scale_laws(self, c):
        coeffs = np.random.default_rng(6).exponential(size=500)
        base, scaled = subband_stats(coeffs), subband_stats(c * coeffs)
        assert scaled.mean == pytest.approx(c * base.mean, rel=1e-12)
        assert scaled.variance == pytest.approx(c**2 * base.variance, rel=1e-12)
        assert scaled.energy == pytest.approx(c**2 * base.energy, rel=1e-12)
        assert scaled.absolute_sum == pytest.approx(abs(c) * base.absolute_sum, rel=1e-12)
        # odd moment follows the sign of the gain
        assert scaled.skewness == pytest.approx(np.sign(c) * base.skewness, abs=1e-9)
        assert scaled.kurtosis == pytest.approx(base.kurtosis, abs=1e-9)


class TestWaveletFeatures:
    def test_thirty_six_values(self):
        features = wavelet_features(np.random.default_rng(9).standard_normal(3600))
        assert features.shape == (36,)
        assert subband_names() == ["d1", "d2", "d3", "d4", "d5", "a5"]

    def test_zero_signal(self):
        np.testing.assert_array_equal(wavelet_features(np.zeros(512)), np.zeros(36))

    def test_impulse_energy_is_conserved(self):
        impulse = np.zeros(1024)
        impulse[100] = 1.0
        energies = wavelet_features(impulse)[2::6]
        assert np.sum(energies) == pytest.approx(1.0, abs=1e-8)
