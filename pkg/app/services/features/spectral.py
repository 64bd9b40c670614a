"""Spectral features: Welch PSD, normalized peak amplitude and MFCCs.

The PSD uses ``scipy.signal.welch`` with a Hann window and density scaling, so
a unit-amplitude sinusoid integrates to 0.5 power. MFCCs follow the usual
framing, power spectrum, triangular Mel filterbank, log and orthonormal DCT-II
chain, averaged across frames.
"""

import logging
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np
from scipy import signal
from scipy.fft import dct, rfft, rfftfreq

from app.core.exceptions import DomainError, SignalLengthError, UndefinedFeatureError
from app.database.models.features import ChannelSpectralFeatures, MelFilterbank, PowerSpectrum

logger = logging.getLogger(__name__)

DEFAULT_SEG_LEN = 256
DEFAULT_OVERLAP = 0.5
DEFAULT_FRAME = 256
DEFAULT_HOP = 128
DEFAULT_N_FILTERS = 26
DEFAULT_N_COEFFS = 20
POWER_FLOOR = 1e-10

# Named peak-amplitude bands in Hz.
PA_BAND_PRESETS: Dict[str, Tuple[float, float]] = {
    "full": (0.08, 5.0),
    "maternal_heart": (1.0, 2.2),
}

Number = Union[float, np.ndarray]


def welch_psd(
    x: np.ndarray,
    fs: float,
    seg_len: int = DEFAULT_SEG_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
) -> PowerSpectrum:
    """Estimate the one-sided PSD by Welch averaging.

    Signals shorter than ``seg_len`` fall back to a single Hann-windowed
    periodogram over the whole signal; the result is flagged.

    Args:
        x: Signal samples.
        fs: Sampling frequency in Hz.
        seg_len: Samples per Welch segment.
        overlap_fraction: Fraction of ``seg_len`` shared by consecutive segments.

    Returns:
    -------
        PowerSpectrum: Bin frequencies and power per Hz.
    """
    if not 0 <= overlap_fraction < 1:
        raise DomainError(f"overlap fraction must be in [0, 1), got {overlap_fraction}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise SignalLengthError("PSD estimation needs at least 2 samples")

    if x.shape[0] < seg_len:
        logger.debug(f"Signal of {x.shape[0]} samples shorter than {seg_len}; using a periodogram")
        freqs, psd = signal.periodogram(
            x, fs=fs, window="hann", scaling="density", detrend=False
        )
        return PowerSpectrum(
            freqs_hz=freqs, psd=psd, resolution_hz=fs / x.shape[0], single_periodogram=True
        )

    freqs, psd = signal.welch(
        x,
        fs=fs,
        window="hann",
        nperseg=seg_len,
        noverlap=int(seg_len * overlap_fraction),
        detrend=False,
        scaling="density",
    )
    return PowerSpectrum(freqs_hz=freqs, psd=np.maximum(psd, 0.0), resolution_hz=fs / seg_len)


def peak_amplitude(ps: PowerSpectrum, f_low: float, f_high: float) -> float:
    """Largest in-band bin of the band-normalized PSD.

    Args:
        ps: Power spectrum.
        f_low: Lower band edge in Hz (inclusive).
        f_high: Upper band edge in Hz (inclusive).

    Returns:
    -------
        float: ``max(P_band) / sum(P_band)``, in ``[1/B, 1]`` for B in-band bins.

    Raises:
    ------
        DomainError: If the band contains no bins.
        UndefinedFeatureError: If the in-band power is zero.
    """
    if f_high < f_low:
        raise DomainError(f"band [{f_low}, {f_high}] is inverted")
    mask = (ps.freqs_hz >= f_low) & (ps.freqs_hz <= f_high)
    if not np.any(mask):
        raise DomainError(f"band [{f_low}, {f_high}] Hz contains no spectral bins")
    band = ps.psd[mask]
    total = float(np.sum(band))
    if total <= 0.0:
        raise UndefinedFeatureError(f"zero power in band [{f_low}, {f_high}] Hz")
    return float(np.max(band) / total)


def hz_to_mel(f: Number) -> Number:
    """Convert Hz to Mel with ``2595 * log10(1 + f / 700)``.

    Raises:
    ------
        DomainError: For negative frequencies.
    """
    f_arr = np.asarray(f, dtype=np.float64)
    if np.any(f_arr < 0):
        raise DomainError("frequency must be non-negative")
    mel = 2595.0 * np.log10(1.0 + f_arr / 700.0)
    return float(mel) if mel.ndim == 0 else mel


def mel_to_hz(m: Number) -> Number:
    """Inverse of ``hz_to_mel``."""
    m_arr = np.asarray(m, dtype=np.float64)
    if np.any(m_arr < 0):
        raise DomainError("Mel value must be non-negative")
    hz = 700.0 * (10.0 ** (m_arr / 2595.0) - 1.0)
    return float(hz) if hz.ndim == 0 else hz


@lru_cache(maxsize=32)
def mel_filterbank(
    fs: float,
    n_fft: int,
    n_filters: int = DEFAULT_N_FILTERS,
    fmin_hz: float = 0.0,
    fmax_hz: float = -1.0,
) -> MelFilterbank:
    """Build (and cache) a triangular Mel filterbank.

    Filter edges are ``n_filters + 2`` points equally spaced on the Mel axis
    between ``mel(fmin)`` and ``mel(fmax)``; weights are evaluated at the
    real-FFT bin frequencies. ``fmax_hz < 0`` means ``fs / 2``. The returned
    weight array is read-only.
    """
    fmax = fs / 2.0 if fmax_hz < 0 else fmax_hz
    if not 0 <= fmin_hz < fmax <= fs / 2.0:
        raise DomainError(f"filterbank range [{fmin_hz}, {fmax}] Hz is invalid for fs={fs}")
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax), n_filters + 2))
    bins = rfftfreq(n_fft, d=1.0 / fs)

    weights = np.zeros((n_filters, bins.shape[0]))
    for m in range(n_filters):
        left, centre, right = edges[m], edges[m + 1], edges[m + 2]
        rising = (bins - left) / (centre - left)
        falling = (right - bins) / (right - centre)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
    weights.setflags(write=False)
    return MelFilterbank(
        n_filters=n_filters,
        weights=weights,
        fmin_hz=fmin_hz,
        fmax_hz=fmax,
        n_fft=n_fft,
        sampling_rate_hz=fs,
    )


def _frames(x: np.ndarray, frame: int, hop: int) -> Tuple[np.ndarray, bool]:
    if x.shape[0] < frame:
        padded = np.zeros(frame)
        padded[: x.shape[0]] = x
        return padded[np.newaxis, :], True
    n_frames = 1 + (x.shape[0] - frame) // hop
    index = np.arange(frame)[np.newaxis, :] + hop * np.arange(n_frames)[:, np.newaxis]
    return x[index], False


def mfcc_with_flag(
    x: np.ndarray,
    fs: float,
    n_coeffs: int = DEFAULT_N_COEFFS,
    frame: int = DEFAULT_FRAME,
    hop: int = DEFAULT_HOP,
    n_filters: int = DEFAULT_N_FILTERS,
) -> Tuple[np.ndarray, bool]:
    """Compute mean MFCCs and report whether the input had to be zero-padded.

    Returns:
    -------
        Tuple[np.ndarray, bool]: ``n_coeffs`` coefficients (c0 first) and the
        padding flag.
    """
    if n_coeffs > n_filters:
        raise DomainError(f"cannot keep {n_coeffs} coefficients from {n_filters} filters")
    x = np.asarray(x, dtype=np.float64)
    frames, padded = _frames(x, frame, hop)
    if padded:
        logger.debug(f"Signal of {x.shape[0]} samples zero-padded to one {frame}-sample frame")

    window = signal.get_window("hann", frame)
    power = np.abs(rfft(frames * window, n=frame, axis=1)) ** 2
    bank = mel_filterbank(float(fs), frame, n_filters)
    energies = np.maximum(power @ bank.weights.T, POWER_FLOOR)
    cepstra = dct(np.log(energies), type=2, norm="ortho", axis=1)[:, :n_coeffs]
    return cepstra.mean(axis=0), padded


def mfcc(
    x: np.ndarray,
    fs: float,
    n_coeffs: int = DEFAULT_N_COEFFS,
    frame: int = DEFAULT_FRAME,
    hop: int = DEFAULT_HOP,
    n_filters: int = DEFAULT_N_FILTERS,
) -> np.ndarray:
    """Mean Mel-frequency cepstral coefficients c0 .. c(n_coeffs-1)."""
    coefficients, _ = mfcc_with_flag(x, fs, n_coeffs, frame, hop, n_filters)
    return coefficients


def channel_spectral_features(
    x: np.ndarray,
    fs: float,
    band: Tuple[float, float] = PA_BAND_PRESETS["full"],
    seg_len: int = DEFAULT_SEG_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
    n_coeffs: int = DEFAULT_N_COEFFS,
    frame: int = DEFAULT_FRAME,
    hop: int = DEFAULT_HOP,
    n_filters: int = DEFAULT_N_FILTERS,
) -> ChannelSpectralFeatures:
    """MFCCs plus peak amplitude for one channel segment.

    A band without power yields a peak amplitude of 0 and a warning instead of
    an error.
    """
    coefficients, padded = mfcc_with_flag(x, fs, n_coeffs, frame, hop, n_filters)
    ps = welch_psd(x, fs, seg_len, overlap_fraction)
    try:
        pa = peak_amplitude(ps, band[0], band[1])
    except UndefinedFeatureError as e:
        logger.warning(f"{e}; peak amplitude set to 0")
        pa = 0.0
    return ChannelSpectralFeatures(
        mfcc=coefficients,
        peak_amplitude=pa,
        mfcc_padded=padded,
        psd_fallback=ps.single_periodogram,
    )
