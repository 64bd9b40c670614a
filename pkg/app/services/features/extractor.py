"""Per-segment feature vectors.

Each channel contributes its mean MFCCs, the six statistics of every db8
sub-band and the normalized peak amplitude, in that order; channel blocks are
concatenated in record channel order.
"""

import logging
from typing import List, Tuple

import numpy as np

from app.core.config import KltScope, PipelineConfig
from app.core.exceptions import ShapeError
from app.database.models.base import FrozenSchema
from app.database.models.features import SUBBAND_STATISTICS
from app.database.models.signal import Segment
from app.services.features import spectral, wavelet
from app.services.signal import klt

logger = logging.getLogger(__name__)


class FeatureSettings(FrozenSchema):
    """Parameters of the per-channel feature extractor."""

    n_mfcc: int = spectral.DEFAULT_N_COEFFS
    n_filters: int = spectral.DEFAULT_N_FILTERS
    frame: int = spectral.DEFAULT_FRAME
    hop: int = spectral.DEFAULT_HOP
    psd_seg_len: int = spectral.DEFAULT_SEG_LEN
    psd_overlap: float = spectral.DEFAULT_OVERLAP
    pa_band: Tuple[float, float] = spectral.PA_BAND_PRESETS["full"]
    wavelet_levels: int = wavelet.DEFAULT_LEVELS
    klt_enabled: bool = True
    klt_lag: int = klt.DEFAULT_LAG
    klt_threshold: float = klt.DEFAULT_JUMP_THRESHOLD
    klt_scope: KltScope = KltScope.SEGMENT

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "FeatureSettings":
        """Collect the feature parameters of a pipeline configuration."""
        return cls(
            n_filters=config.mfcc.n_filters,
            frame=config.mfcc.frame,
            hop=config.mfcc.hop,
            psd_seg_len=config.psd.seg_len,
            psd_overlap=config.psd.overlap,
            pa_band=config.pa.band,
            wavelet_levels=config.wavelet.levels,
            klt_enabled=config.klt.enabled,
            klt_lag=config.klt.lag,
            klt_threshold=config.klt.jump_threshold,
            klt_scope=config.klt.scope,
        )

    @property
    def features_per_channel(self) -> int:
        """Width of one channel block."""
        return self.n_mfcc + len(SUBBAND_STATISTICS) * (self.wavelet_levels + 1) + 1

    @property
    def denoises_segments(self) -> bool:
        """True when KLT runs per segment."""
        return self.klt_enabled and self.klt_scope == KltScope.SEGMENT

    @property
    def min_segment_length(self) -> int:
        """Shortest segment the configured chain accepts."""
        return 2 * self.klt_lag if self.klt_enabled else 0


def channel_feature_names(channel: int, settings: FeatureSettings) -> List[str]:
    """Column names of one channel block (``channel`` is 1-based)."""
    prefix = f"ch{channel}"
    names = [f"{prefix}_mfcc{i:02d}" for i in range(settings.n_mfcc)]
    for band in wavelet.subband_names(settings.wavelet_levels):
        names.extend(f"{prefix}_wl_{band}_{stat}" for stat in SUBBAND_STATISTICS)
    names.append(f"{prefix}_pa")
    return names


def feature_names(n_channels: int, settings: FeatureSettings) -> List[str]:
    """Column names for a segment with ``n_channels`` channels."""
    names: List[str] = []
    for channel in range(1, n_channels + 1):
        names.extend(channel_feature_names(channel, settings))
    return names


def extract_channel_features(x: np.ndarray, fs: float, settings: FeatureSettings) -> np.ndarray:
    """Feature block of one (already denoised) channel segment.

    Returns:
    -------
        np.ndarray: MFCCs, wavelet statistics and peak amplitude.
    """
    spectral_features = spectral.channel_spectral_features(
        x,
        fs,
        band=settings.pa_band,
        seg_len=settings.psd_seg_len,
        overlap_fraction=settings.psd_overlap,
        n_coeffs=settings.n_mfcc,
        frame=settings.frame,
        hop=settings.hop,
        n_filters=settings.n_filters,
    )
    wavelet_block = wavelet.wavelet_features(x, settings.wavelet_levels)
    return np.concatenate(
        [spectral_features.mfcc, wavelet_block, [spectral_features.peak_amplitude]]
    )


def denoise_segment(segment: Segment, settings: FeatureSettings) -> Segment:
    """Return the segment with every channel KLT-denoised."""
    channels = klt.denoise_channels(segment.channels, settings.klt_lag, settings.klt_threshold)
    return segment.model_copy(update={"channels": channels})


def extract_segment_features(
    segment: Segment, settings: FeatureSettings, denoise: bool = True
) -> np.ndarray:
    """Feature vector of a segment.

    With segment-scoped KLT each channel is denoised here unless ``denoise``
    is false; with record scope the caller has already denoised the record.

    Raises:
    ------
        ShapeError: If the result is not finite or has the wrong width.
    """
    if denoise and settings.denoises_segments:
        segment = denoise_segment(segment, settings)
    channels = segment.channels

    vector = np.concatenate(
        [
            extract_channel_features(row, segment.sampling_rate_hz, settings)
            for row in channels
        ]
    )
    expected = settings.features_per_channel * channels.shape[0]
    if vector.shape[0] != expected:
        raise ShapeError(f"feature vector has {vector.shape[0]} values, expected {expected}")
    if not np.all(np.isfinite(vector)):
        raise ShapeError(
            f"{segment.record_name}#{segment.segment_index}: non-finite feature values"
        )
    return vector
