"""Channel preparation and segmentation.

Records are first reduced to the channels used for feature extraction
(prefiltered variants where the database ships them, otherwise raw channels
passed through the band-pass filter) and then cut into labeled segments,
either along annotated contraction/dummy intervals or into fixed-length
non-overlapping windows.
"""

import logging
import re
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import AnnotationError, SegmentationError, SignalLengthError
from app.database.models.evaluation import ChannelSet
from app.database.models.record import (
    ChannelRole,
    Group,
    IntervalAnnotation,
    Record,
)
from app.database.models.signal import BandpassFilter, Segment, WindowKind
from app.services.signal.filtering import apply_zero_phase

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_SECONDS = 180.0


def is_prefiltered(label: str, marker: str) -> bool:
    """True when the channel description marks a prefiltered variant."""
    return bool(marker) and marker.lower() in label.lower()


def base_label(label: str, marker: str) -> str:
    """Channel description with the prefiltered marker and separators removed."""
    if marker:
        label = re.sub(re.escape(marker), "", label, flags=re.IGNORECASE)
    return re.sub(r"[\s_\-]+", "", label).lower()


def select_channels(
    labels: Sequence[str], use_prefiltered: bool, prefiltered_marker: str
) -> List[Tuple[int, bool]]:
    """Pick one source per channel and say whether it still needs filtering.

    With ``use_prefiltered`` every raw channel is replaced by its prefiltered
    twin when the record has one; raw channels without a twin are kept and
    filtered here, and prefiltered channels without a raw counterpart are kept
    as they are. Without it, only the raw channels are used.

    Returns:
    -------
        List[Tuple[int, bool]]: ``(channel index, needs filtering)`` in output order.
    """
    prefiltered = [i for i, lab in enumerate(labels) if is_prefiltered(lab, prefiltered_marker)]
    raw = [i for i in range(len(labels)) if i not in prefiltered]
    if not use_prefiltered:
        return [(i, True) for i in raw]

    twins = {}
    for i in prefiltered:
        twins.setdefault(base_label(labels[i], prefiltered_marker), i)
    chosen: List[Tuple[int, bool]] = []
    for i in raw:
        twin = twins.pop(base_label(labels[i], prefiltered_marker), None)
        if twin is not None:
            chosen.append((twin, False))
        else:
            if prefiltered:
                logger.warning(f"Channel {labels[i]} has no prefiltered variant; filtering it here")
            chosen.append((i, True))
    leftover = sorted(twins.values())
    chosen.extend((i, False) for i in leftover)
    if not prefiltered:
        logger.debug("No prefiltered channels, filtering raw channels")
    return chosen


def prepare_record(
    record: Record,
    filt: Optional[BandpassFilter],
    channel_set: ChannelSet = ChannelSet.EHG_PLUS_TOCO,
    use_prefiltered: bool = False,
    prefiltered_marker: str = "filt",
) -> Record:
    """Select and condition the channels used downstream.

    When ``use_prefiltered`` is set, each channel's prefiltered variant (its
    description contains ``prefiltered_marker``) is used as it is where the
    record has one; every other selected channel is band-pass filtered with
    ``filt``. TOCO channels are dropped for ``ChannelSet.EHG_ONLY``.

    Args:
        record: Record as read from disk.
        filt: Band-pass filter for raw channels; ``None`` skips filtering.
        channel_set: Which channel roles to keep.
        use_prefiltered: Prefer the database's prefiltered channels.
        prefiltered_marker: Substring identifying prefiltered channels.

    Returns:
    -------
        Record: A record restricted to the selected, conditioned channels.
    """
    labels = record.header.channel_labels
    chosen = select_channels(labels, use_prefiltered, prefiltered_marker)
    indices = [i for i, _ in chosen]
    signals = record.signals[indices].astype(np.float64, copy=True)
    to_filter = [k for k, (_, needs) in enumerate(chosen) if needs]
    if filt is not None and to_filter:
        if abs(filt.sampling_rate_hz - record.sampling_rate_hz) > 1e-9:
            raise SegmentationError(
                f"{record.name}: filter designed for {filt.sampling_rate_hz} Hz but "
                f"record is sampled at {record.sampling_rate_hz} Hz"
            )
        signals[to_filter] = apply_zero_phase(filt, signals[to_filter])

    roles = [ChannelRole.from_label(labels[i]) for i in indices]
    if channel_set == ChannelSet.EHG_ONLY:
        keep = [k for k, role in enumerate(roles) if role == ChannelRole.EHG]
        indices = [indices[k] for k in keep]
        signals = signals[keep]
        roles = [roles[k] for k in keep]
    if not indices:
        raise SegmentationError(f"{record.name}: no channels left after selection")

    header = record.header.model_copy(
        update={
            "n_channels": len(indices),
            "channels": [record.header.channels[i] for i in indices],
        }
    )
    return Record(
        header=header,
        signals=np.ascontiguousarray(signals),
        group=record.group,
        channel_roles=roles,
        gestation_at_delivery_weeks=record.gestation_at_delivery_weeks,
    )


def _classification_label(record: Record) -> Group:
    if record.group not in (Group.PRETERM, Group.TERM):
        raise SegmentationError(
            f"{record.name}: group '{record.group.value}' cannot be used for classification"
        )
    return record.group


def segment_fixed(
    record: Record,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
    min_length: int = 0,
) -> List[Segment]:
    """Cut a record into non-overlapping fixed-length windows.

    The trailing partial window is discarded; a record shorter than one window
    yields an empty list.

    Args:
        record: Prepared record.
        window_seconds: Window duration.
        min_length: Minimum samples per segment required downstream.

    Returns:
    -------
        List[Segment]: ``floor(duration / window)`` ordered segments.
    """
    label = _classification_label(record)
    window = int(round(window_seconds * record.sampling_rate_hz))
    if window <= 0:
        raise SegmentationError(f"window of {window_seconds} s has no samples")
    if window < min_length:
        raise SignalLengthError(
            f"window of {window} samples is shorter than the required {min_length}"
        )
    n_windows = record.header.n_samples // window
    segments = []
    for index in range(n_windows):
        start, end = index * window, (index + 1) * window
        segments.append(
            Segment(
                record_name=record.name,
                segment_index=index,
                channels=record.signals[:, start:end],
                sampling_rate_hz=record.sampling_rate_hz,
                channel_roles=record.channel_roles,
                label=label,
                window_kind=WindowKind.FIXED,
                start_sample=start,
                end_sample=end,
            )
        )
    return segments


def segment_annotated(
    record: Record,
    annotations: Sequence[IntervalAnnotation],
    min_length: int = 0,
) -> List[Segment]:
    """Cut one segment per annotated interval.

    Args:
        record: Prepared record.
        annotations: Intervals of this record.
        min_length: Minimum samples per segment required downstream.

    Returns:
    -------
        List[Segment]: Segments ordered by start sample.

    Raises:
    ------
        AnnotationError: If an interval belongs to another record or exceeds
            the signal bounds.
        SignalLengthError: If an interval is shorter than ``min_length``.
    """
    if not annotations:
        return []
    label = _classification_label(record)
    segments = []
    ordered = sorted(annotations, key=lambda a: a.start_sample)
    for index, annotation in enumerate(ordered):
        if annotation.record_name != record.name:
            raise AnnotationError(
                f"annotation for {annotation.record_name} passed with record {record.name}"
            )
        if annotation.end_sample > record.header.n_samples:
            raise AnnotationError(
                f"{record.name}: interval [{annotation.start_sample}, {annotation.end_sample}) "
                f"exceeds {record.header.n_samples} samples"
            )
        if annotation.length < min_length:
            raise SignalLengthError(
                f"{record.name}: interval [{annotation.start_sample}, {annotation.end_sample}) "
                f"has {annotation.length} samples, fewer than the required {min_length}"
            )
        segments.append(
            Segment(
                record_name=record.name,
                segment_index=index,
                channels=record.signals[:, annotation.start_sample : annotation.end_sample],
                sampling_rate_hz=record.sampling_rate_hz,
                channel_roles=record.channel_roles,
                label=label,
                window_kind=WindowKind(annotation.kind.value),
                start_sample=annotation.start_sample,
                end_sample=annotation.end_sample,
            )
        )
    return segments
