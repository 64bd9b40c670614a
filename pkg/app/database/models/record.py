"""Record models for PhysioNet EHG recordings.

This module defines the header, record and interval-annotation schemas produced
by the WFDB reader and consumed by segmentation.
"""

from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.database.models.base import FrozenSchema

SUPPORTED_FORMATS = (16,)
DEFAULT_ADC_GAIN = 200.0


class Group(str, Enum):
    """Delivery outcome group of a recording."""

    PRETERM = "preterm"
    TERM = "term"
    NONPREGNANT = "nonpregnant"


class ChannelRole(str, Enum):
    """Physiological role of a channel."""

    EHG = "EHG"
    TOCO = "TOCO"

    @classmethod
    def from_label(cls, label: str) -> "ChannelRole":
        """Infer the role from a header description: TOCO if it says so, else EHG."""
        return cls.TOCO if "toco" in label.lower() else cls.EHG


class AnnotationKind(str, Enum):
    """Kind of an annotated interval."""

    CONTRACTION = "contraction"
    DUMMY = "dummy"


class ChannelSpec(FrozenSchema):
    """Per-signal fields of a WFDB header line.

    Attributes:
        file_name: Signal file the channel is stored in.
        storage_format: WFDB format code (only 16 is readable).
        adc_gain: ADC units per physical unit.
        baseline: ADC value corresponding to physical zero.
        units: Physical unit string.
        adc_resolution: ADC resolution in bits, 0 if unspecified.
        adc_zero: ADC value at the centre of the ADC range.
        initial_value: First sample value (informational).
        checksum: 16-bit checksum over all samples (informational).
        block_size: Block size (informational).
        channel_label: Free-text description, e.g. ``EHG1`` or ``TOCO``.
    """

    file_name: str
    storage_format: int
    adc_gain: float = DEFAULT_ADC_GAIN
    baseline: int = 0
    units: str = "mV"
    adc_resolution: int = 0
    adc_zero: int = 0
    initial_value: int = 0
    checksum: int = 0
    block_size: int = 0
    channel_label: str = ""

    @field_validator("adc_gain")
    @classmethod
    def validate_gain(cls, v: float) -> float:
        """Ensure the gain is strictly positive."""
        if v <= 0:
            raise ValueError(f"adc_gain must be positive, got {v}")
        return v


class RecordHeader(FrozenSchema):
    """Parsed WFDB header.

    Attributes:
        record_name: Record identifier from the record line.
        n_channels: Number of signals.
        sampling_rate_hz: Sampling frequency shared by all signals.
        n_samples: Samples per signal.
        channels: One ``ChannelSpec`` per signal, in header order.
        comments: Raw comment lines without the leading ``#``.
        metadata: Key/value pairs recovered from comment lines (lower-case keys).
    """

    record_name: str
    n_channels: int = Field(ge=1)
    sampling_rate_hz: float = Field(gt=0)
    n_samples: int = Field(gt=0)
    channels: List[ChannelSpec]
    comments: List[str] = Field(default_factory=list)
    metadata: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_channels(self) -> "RecordHeader":
        """Check the channel list against the declared signal count."""
        if len(self.channels) != self.n_channels:
            raise ValueError(
                f"header declares {self.n_channels} signals but lists {len(self.channels)}"
            )
        return self

    @property
    def gestation_weeks(self) -> Optional[float]:
        """Gestation at delivery in weeks if present in the comments."""
        value = self.metadata.get("gestation")
        if value is None:
            return None
        try:
            return float(value)
        except ValueError:
            return None

    @property
    def channel_labels(self) -> List[str]:
        """Channel descriptions in header order."""
        return [c.channel_label for c in self.channels]


class Record(FrozenSchema):
    """One subject's multichannel recording in physical units.

    Attributes:
        header: The parsed header.
        signals: Array of shape (n_channels, n_samples).
        group: Delivery outcome group.
        channel_roles: EHG or TOCO per channel.
        gestation_at_delivery_weeks: Gestation at delivery when known.
    """

    header: RecordHeader
    signals: np.ndarray
    group: Group
    channel_roles: List[ChannelRole]
    gestation_at_delivery_weeks: Optional[float] = None

    @model_validator(mode="after")
    def validate_shape(self) -> "Record":
        """Check every signal has exactly ``n_samples`` entries."""
        expected = (self.header.n_channels, self.header.n_samples)
        if self.signals.ndim != 2 or self.signals.shape != expected:
            raise ValueError(
                f"signals shape {self.signals.shape} does not match header {expected}"
            )
        if len(self.channel_roles) != self.header.n_channels:
            raise ValueError("channel_roles must have one entry per channel")
        return self

    @property
    def name(self) -> str:
        """Record name."""
        return self.header.record_name

    @property
    def sampling_rate_hz(self) -> float:
        """Sampling frequency."""
        return self.header.sampling_rate_hz

    @property
    def duration_seconds(self) -> float:
        """Recording duration in seconds."""
        return self.header.n_samples / self.header.sampling_rate_hz


class IntervalAnnotation(FrozenSchema):
    """A contraction or dummy interval ``[start_sample, end_sample)``."""

    record_name: str
    kind: AnnotationKind
    start_sample: int = Field(ge=0)
    end_sample: int

    @model_validator(mode="after")
    def validate_order(self) -> "IntervalAnnotation":
        """Reject empty or inverted intervals."""
        if self.end_sample <= self.start_sample:
            raise ValueError(
                f"end_sample {self.end_sample} must exceed start_sample {self.start_sample}"
            )
        return self

    @property
    def length(self) -> int:
        """Interval length in samples."""
        return self.end_sample - self.start_sample
