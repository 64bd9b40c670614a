"""Feature-extraction models.

Schemas for power spectra, Mel filterbanks, per-channel spectral features and
wavelet decompositions, plus the feature-matrix row.
"""

from typing import List

import numpy as np
from pydantic import Field

from app.database.models.base import FrozenSchema

SUBBAND_STATISTICS = ("mean", "var", "energy", "abs_sum", "skew", "kurt")


class PowerSpectrum(FrozenSchema):
    """One-sided power spectral density.

    Attributes:
        freqs_hz: Ascending bin frequencies.
        psd: Power per Hz at each bin.
        resolution_hz: Bin spacing.
        single_periodogram: True when the signal was too short for Welch
            averaging and a single full-length periodogram was used.
    """

    freqs_hz: np.ndarray
    psd: np.ndarray
    resolution_hz: float
    single_periodogram: bool = False


class MelFilterbank(FrozenSchema):
    """Triangular Mel filterbank over the bins of an ``n_fft``-point real FFT."""

    n_filters: int = Field(ge=1)
    weights: np.ndarray
    fmin_hz: float
    fmax_hz: float
    n_fft: int
    sampling_rate_hz: float


class ChannelSpectralFeatures(FrozenSchema):
    """MFCC vector and peak amplitude of one channel segment.

    Attributes:
        mfcc: Mean cepstral coefficients c0..c19.
        peak_amplitude: Largest share of in-band power held by one bin; 0 when
            the band carried no power.
        mfcc_padded: True when the segment was shorter than one frame.
        psd_fallback: True when the PSD fell back to a single periodogram.
    """

    mfcc: np.ndarray
    peak_amplitude: float = Field(ge=0.0, le=1.0)
    mfcc_padded: bool = False
    psd_fallback: bool = False


class WaveletDecomposition(FrozenSchema):
    """Periodized Mallat decomposition.

    Attributes:
        details: Detail sequences D1 (finest) .. Dn.
        approximation: Coarsest approximation sequence.
        boundary_mode: Always ``periodization``.
        original_length: Input length before periodic right-padding.
    """

    details: List[np.ndarray]
    approximation: np.ndarray
    boundary_mode: str = "periodization"
    original_length: int

    @property
    def levels(self) -> int:
        """Decomposition depth."""
        return len(self.details)

    @property
    def padded_length(self) -> int:
        """Total coefficient count, equal to the padded input length."""
        return int(sum(len(d) for d in self.details) + len(self.approximation))


class SubbandStats(FrozenSchema):
    """Six statistics of one coefficient sequence."""

    mean: float
    variance: float = Field(ge=0.0)
    energy: float = Field(ge=0.0)
    absolute_sum: float = Field(ge=0.0)
    skewness: float
    kurtosis: float

    def as_array(self) -> np.ndarray:
        """Statistics in canonical feature order."""
        return np.array(
            [
                self.mean,
                self.variance,
                self.energy,
                self.absolute_sum,
                self.skewness,
                self.kurtosis,
            ]
        )


class FeatureRow(FrozenSchema):
    """One row of the feature matrix: a segment's vector with its provenance.

    Attributes:
        record_name: Source record.
        segment_index: Segment position within the record.
        window_kind: Contraction, dummy or fixed.
        label: 1 for preterm, 0 for term.
        values: Feature vector.
    """

    record_name: str
    segment_index: int = Field(ge=0)
    window_kind: str
    label: int = Field(ge=0, le=1)
    values: np.ndarray
