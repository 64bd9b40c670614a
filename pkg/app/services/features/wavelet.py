"""Daubechies-8 wavelet decomposition and sub-band statistics.

The transform is a periodized Mallat cascade written directly in numpy: each
level correlates the current approximation with the 16-tap db8 low-pass and
high-pass filters at even shifts, wrapping indices modulo the level length.
Periodization keeps the transform orthogonal, so energy is preserved exactly
and the inverse is the transpose.
"""

import logging
from typing import List, Tuple

import numpy as np
from scipy import stats

from app.core.exceptions import DomainError, SignalLengthError
from app.database.models.features import SubbandStats, WaveletDecomposition

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 5
VARIANCE_GUARD = 1e-24

# db8 scaling (reconstruction low-pass) coefficients; sum = sqrt(2).
DB8_SCALING = np.array(
    [
        0.054415842243081609,
        0.31287159091446592,
        0.67563073629801285,
        0.58535468365486909,
        -0.015829105256023893,
        -0.28401554296242809,
        0.00047248457399797254,
        0.12874742662018601,
        -0.017369301002022108,
        -0.044088253931064719,
        0.013981027917015516,
        0.0087460940470156547,
        -0.0048703529930106603,
        -0.00039174037299597711,
        0.00067544940599855677,
        -0.00011747678400228192,
    ]
)


def db8_filters() -> Tuple[np.ndarray, np.ndarray]:
    """Return the (low-pass, high-pass) analysis pair.

    The high-pass filter is the quadrature mirror ``g[n] = (-1)^n h[L-1-n]``.
    """
    h = DB8_SCALING
    n = np.arange(h.shape[0])
    g = ((-1.0) ** n) * h[::-1]
    return h, g


def _shift_index(length: int, taps: int) -> np.ndarray:
    return (2 * np.arange(length // 2)[:, np.newaxis] + np.arange(taps)[np.newaxis, :]) % length


def _analysis_step(x: np.ndarray, h: np.ndarray, g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    windows = x[_shift_index(x.shape[0], h.shape[0])]
    return windows @ h, windows @ g


def _synthesis_step(
    approximation: np.ndarray, detail: np.ndarray, h: np.ndarray, g: np.ndarray
) -> np.ndarray:
    length = 2 * approximation.shape[0]
    out = np.zeros(length)
    contributions = approximation[:, np.newaxis] * h + detail[:, np.newaxis] * g
    np.add.at(out, _shift_index(length, h.shape[0]), contributions)
    return out


def dwt_db8(x: np.ndarray, levels: int = DEFAULT_LEVELS) -> WaveletDecomposition:
    """Multi-level periodized db8 decomposition.

    Inputs whose length is not a multiple of ``2**levels`` are right-padded by
    periodic extension; the original length is recorded.

    Args:
        x: Signal samples.
        levels: Number of decomposition levels.

    Returns:
    -------
        WaveletDecomposition: Details D1 (finest) .. D<levels> and the final
        approximation.

    Raises:
    ------
        SignalLengthError: If the signal is shorter than ``2**levels``.
    """
    if levels < 1:
        raise DomainError(f"levels must be at least 1, got {levels}")
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    block = 2**levels
    if n < block:
        raise SignalLengthError(f"signal of {n} samples is shorter than 2^{levels} = {block}")

    remainder = n % block
    current = np.pad(x, (0, block - remainder), mode="wrap") if remainder else x

    h, g = db8_filters()
    details: List[np.ndarray] = []
    for _ in range(levels):
        current, detail = _analysis_step(current, h, g)
        details.append(detail)
    return WaveletDecomposition(details=details, approximation=current, original_length=n)


def idwt_db8(decomposition: WaveletDecomposition) -> np.ndarray:
    """Invert ``dwt_db8``, returning the signal truncated to its original length."""
    h, g = db8_filters()
    current = decomposition.approximation
    for detail in reversed(decomposition.details):
        current = _synthesis_step(current, detail, h, g)
    return current[: decomposition.original_length]


def subband_stats(coeffs: np.ndarray) -> SubbandStats:
    """Population mean, variance, energy, absolute sum, skewness and excess kurtosis.

    Skewness and kurtosis are 0 when the variance is below 1e-24.

    Raises:
    ------
        DomainError: If the sequence is empty.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    if c.size == 0:
        raise DomainError("sub-band statistics need at least one coefficient")
    variance = float(np.var(c))
    if variance < VARIANCE_GUARD:
        skewness, kurtosis = 0.0, 0.0
    else:
        skewness = float(stats.skew(c, bias=True))
        kurtosis = float(stats.kurtosis(c, fisher=True, bias=True))
    return SubbandStats(
        mean=float(np.mean(c)),
        variance=variance,
        energy=float(np.sum(c * c)),
        absolute_sum=float(np.sum(np.abs(c))),
        skewness=skewness,
        kurtosis=kurtosis,
    )


def subband_names(levels: int = DEFAULT_LEVELS) -> List[str]:
    """Sub-band labels in feature order: d1 .. d<levels>, a<levels>."""
    return [f"d{k}" for k in range(1, levels + 1)] + [f"a{levels}"]


def wavelet_features(x: np.ndarray, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Six statistics for each of D1..Dn and An, concatenated (36 values at 5 levels)."""
    decomposition = dwt_db8(x, levels)
    bands = decomposition.details + [decomposition.approximation]
    return np.concatenate([subband_stats(band).as_array() for band in bands])
