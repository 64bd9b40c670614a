import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.exceptions import DomainError, SignalLengthError, UndefinedFeatureError
from app.database.models.features import PowerSpectrum
from app.services.features.spectral import (
    POWER_FLOOR,
    channel_spectral_features,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    mfcc,
    mfcc_with_flag,
    peak_amplitude,
    welch_psd,
)

FS = 20.0


def spectrum(psd, freqs=None):
    psd = np.asarray(psd, dtype=float)
    freqs = np.arange(psd.shape[0], dtype=float) if freqs is None else np.asarray(freqs, dtype=float)
    return PowerSpectrum(freqs_hz=freqs, psd=psd, resolution_hz=1.0)


class TestWelch:
    def test_sinusoid_peak_bin(self):
        x = np.sin(2 * np.pi * 1.0 * np.arange(2048) / FS)
        ps = welch_psd(x, FS, seg_len=256)
        nearest = np.argmin(np.abs(ps.freqs_hz - 1.0))
        assert np.argmax(ps.psd) == nearest
        assert ps.resolution_hz == pytest.approx(FS / 256)

    def test_white_noise_is_flat(self):
        rng = np.random.default_rng(0)
        average = np.mean(
            [welch_psd(rng.standard_normal(4096), FS).psd for _ in range(20)], axis=0
        )
        bands = np.array_split(average[1:-1], 8)
        means = np.array([band.mean() for band in bands])
        assert means.max() / means.min() < 3

    def test_power_matches_variance(self):
        x = np.random.default_rng(1).standard_normal(8192)
        ps = welch_psd(x, FS)
        df = ps.freqs_hz[1] - ps.freqs_hz[0]
        assert np.sum(ps.psd) * df == pytest.approx(np.var(x), rel=0.1)

    def test_zero_signal(self):
        np.testing.assert_array_equal(welch_psd(np.zeros(512), FS).psd, 0.0)

    def test_short_signal_falls_back_to_periodogram(self):
        ps = welch_psd(np.random.default_rng(2).standard_normal(100), FS, seg_len=256)
        assert ps.single_periodogram
        assert ps.resolution_hz == pytest.approx(FS / 100)

    def test_invalid_overlap(self):
        with pytest.raises(DomainError):
            welch_psd(np.ones(512), FS, overlap_fraction=1.0)

    def test_needs_two_samples(self):
        with pytest.raises(SignalLengthError):
            welch_psd(np.ones(1), FS)


class TestPeakAmplitude:
    def test_normalized_maximum(self):
        assert peak_amplitude(spectrum([0, 4, 1, 0]), 0, 3) == pytest.approx(0.8)

    def test_single_bin_reaches_one(self):
        assert peak_amplitude(spectrum([0, 0, 7, 0]), 0, 3) == 1.0

    def test_uniform_band_gives_reciprocal_width(self):
        assert peak_amplitude(spectrum(np.ones(6)), 1, 4) == pytest.approx(1 / 4)

    def test_band_without_bins(self):
        with pytest.raises(DomainError):
            peak_amplitude(spectrum([1, 2, 3]), 10, 20)

    def test_band_without_power(self):
        with pytest.raises(UndefinedFeatureError):
            peak_amplitude(spectrum([0, 0, 1]), 0, 1)

    @given(st.lists(st.floats(0, 1e6), min_size=2, max_size=64))
    def test_bounds(self, values):
        psd = np.array(values)
        if psd.sum() <= 0:
            return
        pa = peak_amplitude(spectrum(psd), 0, len(values) - 1)
        assert 1 / len(values) - 1e-12 <= pa <= 1.0

    @pytest.mark.parametrize("gain", [1e-3, 2.0, -5.0, 1e4])
    def test_scaling_the_signal_keeps_the_peak_amplitude(self, gain):
        x = np.random.default_rng(4).standard_normal(2400) + np.sin(2 * np.pi * 0.7 * np.arange(2400) / FS)
        reference = peak_amplitude(welch_psd(x, FS), 0.08, 5.0)
        assert peak_amplitude(welch_psd(gain * x, FS), 0.08, 5.0) == pytest.approx(reference, abs=1e-9)


class TestMel:
    @pytest.mark.parametrize("hz, mel", [(0.0, 0.0), (700.0, 781.17), (1000.0, 999.99)])
    def test_reference_points(self, hz, mel):
        assert hz_to_mel(hz) == pytest.approx(mel, abs=0.01)

    @given(st.floats(0, 20000))
    def test_inverse(self, f):
        assert mel_to_hz(hz_to_mel(f)) == pytest.approx(f, abs=1e-9)

    def test_negative_frequency(self):
        with pytest.raises(DomainError):
            hz_to_mel(-1.0)

    def test_filterbank_shape_and_range(self):
        bank = mel_filterbank(FS, 256, 26)
        assert bank.weights.shape == (26, 129)
        assert np.all(bank.weights >= 0) and np.all(bank.weights <= 1)
        assert np.all(bank.weights.max(axis=1) > 0)
        assert not bank.weights.flags.writeable


def reference_mfcc(x, fs, n_coeffs=20, frame=256, hop=128, n_filters=26):
    """Loop-based MFCC used as an independent oracle."""
    n_frames = 1 + (len(x) - frame) // hop
    window = np.array([0.5 - 0.5 * np.cos(2 * np.pi * n / frame) for n in range(frame)])
    mel_edges = np.linspace(0.0, 2595.0 * np.log10(1 + (fs / 2) / 700.0), n_filters + 2)
    hz_edges = 700.0 * (10 ** (mel_edges / 2595.0) - 1)
    bins = np.arange(frame // 2 + 1) * fs / frame
    coefficients = np.zeros(n_coeffs)
    for f in range(n_frames):
        chunk = x[f * hop : f * hop + frame] * window
        power = np.abs(np.fft.rfft(chunk)) ** 2
        log_energy = np.zeros(n_filters)
        for m in range(n_filters):
            left, centre, right = hz_edges[m], hz_edges[m + 1], hz_edges[m + 2]
            weights = np.maximum(0, np.minimum((bins - left) / (centre - left), (right - bins) / (right - centre)))
            log_energy[m] = np.log(max(np.dot(weights, power), POWER_FLOOR))
        for k in range(n_coeffs):
            scale = np.sqrt(1 / n_filters) if k == 0 else np.sqrt(2 / n_filters)
            coefficients[k] += scale * sum(
                log_energy[m] * np.cos(np.pi * k * (2 * m + 1) / (2 * n_filters))
                for m in range(n_filters)
            )
    return coefficients / n_frames


class TestMfcc:
    def test_twenty_coefficients(self):
        x = np.random.default_rng(3).standard_normal(3600)
        assert mfcc(x, FS).shape == (20,)

    def test_zero_signal(self):
        coefficients = mfcc(np.zeros(1024), FS)
        assert coefficients[0] == pytest.approx(np.sqrt(26) * np.log(1e-10))
        np.testing.assert_allclose(coefficients[1:], 0.0, atol=1e-9)

    def test_matches_reference(self):
        x = np.sin(2 * np.pi * 1.0 * np.arange(1200) / FS)
        np.testing.assert_allclose(mfcc(x, FS), reference_mfcc(x, FS), atol=1e-6)

    def test_short_input_is_padded(self):
        coefficients, padded = mfcc_with_flag(np.ones(100), FS)
        assert padded
        assert np.all(np.isfinite(coefficients))

    def test_more_coefficients_than_filters(self):
        with pytest.raises(DomainError):
            mfcc(np.ones(512), FS, n_coeffs=30, n_filters=26)

    @pytest.mark.parametrize("gain", [0.1, 3.0, 250.0])
    def test_gain_moves_only_c0(self, gain):
        x = np.random.default_rng(8).standard_normal(3600)
        base = mfcc(x, FS)
        scaled = mfcc(gain * x, FS)
        assert scaled[0] - base[0] == pytest.approx(2 * np.log(gain) * np.sqrt(26), abs=1e-6)
        np.testing.assert_allclose(scaled[1:], base[1:], atol=1e-6)


def test_silent_channel_gets_zero_peak_amplitude():
    features = channel_spectral_features(np.zeros(1024), FS)
    assert features.peak_amplitude == 0.0
    assert features.mfcc.shape == (20,)
