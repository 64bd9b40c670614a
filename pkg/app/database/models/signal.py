"""Signal-processing models.

Schemas for the band-pass filter, labeled segments and the intermediate values
of Karhunen-Loeve subspace denoising.
"""

from enum import Enum
from typing import List

import numpy as np
from pydantic import Field, model_validator

from app.database.models.base import FrozenSchema
from app.database.models.record import ChannelRole, Group


class WindowKind(str, Enum):
    """Origin of a segment."""

    CONTRACTION = "contraction"
    DUMMY = "dummy"
    FIXED = "fixed"


class BandpassFilter(FrozenSchema):
    """Digital Butterworth band-pass filter as second-order sections.

    Attributes:
        order: Total filter order (even).
        low_cut_hz: Lower -3 dB edge.
        high_cut_hz: Upper -3 dB edge.
        sampling_rate_hz: Sampling frequency the filter was designed for.
        sos: Array of shape (n_sections, 6), rows ``[b0, b1, b2, 1, a1, a2]``.
    """

    order: int
    low_cut_hz: float
    high_cut_hz: float
    sampling_rate_hz: float
    sos: np.ndarray

    @property
    def n_sections(self) -> int:
        """Number of second-order sections."""
        return int(self.sos.shape[0])


class Segment(FrozenSchema):
    """A labeled, windowed slice of a record.

    Attributes:
        record_name: Source record.
        segment_index: Position of the segment within its record.
        channels: Array of shape (n_channels, length).
        channel_roles: Role per channel.
        label: Preterm or term.
        window_kind: Contraction, dummy or fixed window.
        start_sample: First sample (inclusive) in the source record.
        end_sample: Last sample (exclusive) in the source record.
        sampling_rate_hz: Sampling frequency of the channels.
    """

    record_name: str
    segment_index: int = Field(ge=0)
    channels: np.ndarray
    sampling_rate_hz: float = Field(gt=0)
    channel_roles: List[ChannelRole]
    label: Group
    window_kind: WindowKind
    start_sample: int = Field(ge=0)
    end_sample: int

    @model_validator(mode="after")
    def validate_segment(self) -> "Segment":
        """Check label, shape and bounds."""
        if self.label not in (Group.PRETERM, Group.TERM):
            raise ValueError(f"segment label must be preterm or term, got {self.label}")
        if self.channels.ndim != 2:
            raise ValueError("channels must be a 2-D array (n_channels, length)")
        if self.channels.shape[1] != self.end_sample - self.start_sample:
            raise ValueError("channel length disagrees with the sample range")
        if len(self.channel_roles) != self.channels.shape[0]:
            raise ValueError("channel_roles must have one entry per channel")
        return self

    @property
    def length(self) -> int:
        """Samples per channel."""
        return int(self.channels.shape[1])


class AutocorrSequence(FrozenSchema):
    """Unbiased autocorrelation estimate ``r[0..L-1]``."""

    values: np.ndarray
    lag: int = Field(ge=2)


class EigenBasis(FrozenSchema):
    """Ascending eigenvalues with eigenvectors as paired columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        """Matrix dimension L."""
        return int(self.eigenvalues.shape[0])


class SubspaceSelection(FrozenSchema):
    """Result of the log-eigenvalue jump rule.

    Attributes:
        retain_from_index: 1-based index k; the retained set is ``{k, ..., L}``.
        threshold: Relative-change threshold that was applied.
        clamped_log_eigenvalues: Natural logs of the clamped eigenvalues.
    """

    retain_from_index: int = Field(ge=1)
    threshold: float
    clamped_log_eigenvalues: np.ndarray

    @property
    def n_retained(self) -> int:
        """Number of retained eigenvectors."""
        return len(self.clamped_log_eigenvalues) - self.retain_from_index + 1
