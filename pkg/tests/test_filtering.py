import numpy as np
import pytest

from app.core.exceptions import FilterDesignError, SignalLengthError
from app.services.signal.filtering import (
    apply_zero_phase,
    design_butterworth_bandpass,
    magnitude_response_db,
)

FS = 20.0
TRANSIENT = int(20 * FS)


@pytest.fixture(scope="module")
def bandpass():
    return design_butterworth_bandpass(4, 0.08, 5.0, FS)


def test_sections_follow_prototype_order(bandpass):
    assert bandpass.n_sections == 2
    assert bandpass.sos.shape == (2, 6)


def test_unity_gain_at_geometric_centre(bandpass):
    centre = np.sqrt(0.08 * 5.0)
    assert magnitude_response_db(bandpass, [centre])[0] == pytest.approx(0.0, abs=0.1)


@pytest.mark.parametrize("edge", [0.08, 5.0])
def test_minus_three_db_at_cutoffs(bandpass, edge):
    assert magnitude_response_db(bandpass, [edge])[0] == pytest.approx(-3.01, abs=0.3)


def test_dc_is_rejected(bandpass):
    assert magnitude_response_db(bandpass, [0.0])[0] <= -40.0


@pytest.mark.parametrize(
    "order, low, high",
    [(4, 0.08, 11.0), (4, 0.08, 10.0), (3, 0.08, 5.0), (4, 5.0, 0.08), (0, 0.08, 5.0)],
)
def test_invalid_designs(order, low, high):
    with pytest.raises(FilterDesignError):
        design_butterworth_bandpass(order, low, high, FS)


def test_zero_signal_stays_zero(bandpass):
    np.testing.assert_array_equal(apply_zero_phase(bandpass, np.zeros(500)), np.zeros(500))


def test_centre_frequency_passes_without_phase_shift(bandpass):
    t = np.arange(6000) / FS
    x = np.sin(2 * np.pi * np.sqrt(0.08 * 5.0) * t)
    y = apply_zero_phase(bandpass, x)
    middle = slice(TRANSIENT, -TRANSIENT)
    assert np.max(np.abs(y[middle])) == pytest.approx(1.0, abs=0.02)
    assert np.max(np.abs(y[middle] - x[middle])) < 0.03


def test_dc_offset_is_removed(bandpass):
    y = apply_zero_phase(bandpass, np.ones(3000))
    assert np.max(np.abs(y[TRANSIENT:-TRANSIENT])) < 0.01


def test_filters_each_row_of_a_matrix(bandpass):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 400))
    y = apply_zero_phase(bandpass, x)
    assert y.shape == x.shape
    np.testing.assert_allclose(y[1], apply_zero_phase(bandpass, x[1]))


def test_too_short_signal(bandpass):
    with pytest.raises(SignalLengthError):
        apply_zero_phase(bandpass, np.ones(12))


def test_second_pass_barely_changes_in_band_content(bandpass):
    x = np.sin(2 * np.pi * np.sqrt(0.08 * 5.0) * np.arange(6000) / FS)
    once = apply_zero_phase(bandpass, x)
    twice = apply_zero_phase(bandpass, once)
    middle = slice(TRANSIENT, -TRANSIENT)
    amplitude_once = np.max(np.abs(once[middle]))
    amplitude_twice = np.max(np.abs(twice[middle]))
    assert abs(amplitude_twice - amplitude_once) < 0.03 * amplitude_once


@pytest.mark.parametrize("freq", [0.3, np.sqrt(0.08 * 5.0), 2.0])
def test_cross_correlation_peaks_at_zero_lag(bandpass, freq):
    x = np.sin(2 * np.pi * freq * np.arange(6000) / FS)
    y = apply_zero_phase(bandpass, x)
    middle = slice(TRANSIENT, -TRANSIENT)
    xc = np.correlate(y[middle], x[middle], mode="full")
    lags = np.arange(-(xc.shape[0] // 2), xc.shape[0] // 2 + 1)
    near = np.abs(lags) <= int(FS / (2 * freq))
    assert lags[near][np.argmax(xc[near])] == 0
