"""Butterworth band-pass design and zero-phase application.

The filter is designed as second-order sections with ``scipy.signal.butter``
(bilinear transform with pre-warping) and applied forward-backward with
``scipy.signal.sosfiltfilt``, so the effective magnitude response is the square
of the single-pass response and the phase response is zero.
"""

import logging

import numpy as np
from scipy import signal

from app.core.exceptions import FilterDesignError, SignalLengthError
from app.database.models.signal import BandpassFilter

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 4
DEFAULT_LOW_CUT_HZ = 0.08
DEFAULT_HIGH_CUT_HZ = 5.0


def design_butterworth_bandpass(
    order: int = DEFAULT_ORDER,
    low_cut_hz: float = DEFAULT_LOW_CUT_HZ,
    high_cut_hz: float = DEFAULT_HIGH_CUT_HZ,
    fs: float = 20.0,
) -> BandpassFilter:
    """Design a digital Butterworth band-pass filter.

    ``order`` is the order of the band-pass filter itself, so the analog
    low-pass prototype has ``order // 2`` poles and the result has
    ``order // 2`` second-order sections.

    Args:
        order: Even band-pass order (4 by default).
        low_cut_hz: Lower -3 dB frequency.
        high_cut_hz: Upper -3 dB frequency.
        fs: Sampling frequency in Hz.

    Returns:
    -------
        BandpassFilter: Filter coefficients as second-order sections.

    Raises:
    ------
        FilterDesignError: If the order is odd or non-positive, the cutoffs are
            not ordered, or a cutoff reaches the Nyquist frequency.
    """
    if order < 2 or order % 2:
        raise FilterDesignError(f"band-pass order must be a positive even number, got {order}")
    if fs <= 0:
        raise FilterDesignError(f"sampling rate must be positive, got {fs}")
    nyquist = fs / 2.0
    if not 0 < low_cut_hz < high_cut_hz:
        raise FilterDesignError(
            f"cutoffs must satisfy 0 < low < high, got {low_cut_hz}, {high_cut_hz}"
        )
    if high_cut_hz >= nyquist:
        raise FilterDesignError(
            f"high cutoff {high_cut_hz} Hz must be below the Nyquist frequency {nyquist} Hz"
        )

    sos = signal.butter(
        order // 2, [low_cut_hz, high_cut_hz], btype="bandpass", output="sos", fs=fs
    )
    _, poles, _ = signal.sos2zpk(sos)
    if np.any(np.abs(poles) >= 1.0):
        raise FilterDesignError("designed filter is unstable (pole on or outside unit circle)")

    logger.debug(
        f"Designed order-{order} band-pass {low_cut_hz}-{high_cut_hz} Hz at fs={fs} "
        f"({sos.shape[0]} sections)"
    )
    return BandpassFilter(
        order=order,
        low_cut_hz=low_cut_hz,
        high_cut_hz=high_cut_hz,
        sampling_rate_hz=fs,
        sos=sos,
    )


def magnitude_response_db(filt: BandpassFilter, freqs_hz: np.ndarray) -> np.ndarray:
    """Single-pass magnitude response in dB at the requested frequencies."""
    _, h = signal.sosfreqz(
        filt.sos, worN=np.atleast_1d(np.asarray(freqs_hz, dtype=float)), fs=filt.sampling_rate_hz
    )
    return 20.0 * np.log10(np.maximum(np.abs(h), np.finfo(float).tiny))


def apply_zero_phase(filt: BandpassFilter, x: np.ndarray) -> np.ndarray:
    """Filter forward and backward along the last axis.

    Both ends are extended by mirror reflection of ``3 * order`` samples before
    the bidirectional pass, and the extension is removed afterwards.

    Args:
        filt: Filter to apply.
        x: Signal, or array of signals along the last axis.

    Returns:
    -------
        np.ndarray: Filtered signal with the input's shape.

    Raises:
    ------
        SignalLengthError: If the signal is not longer than ``3 * order``.
    """
    x = np.asarray(x, dtype=np.float64)
    padlen = 3 * filt.order
    if x.shape[-1] <= padlen:
        raise SignalLengthError(
            f"signal of {x.shape[-1]} samples is too short for zero-phase filtering "
            f"(needs more than {padlen})"
        )
    return signal.sosfiltfilt(filt.sos, x, axis=-1, padtype="even", padlen=padlen)
