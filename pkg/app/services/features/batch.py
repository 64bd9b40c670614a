"""Dataset-wide feature extraction.

Records are loaded, prepared and segmented lazily in the calling process;
segment feature extraction fans out over a joblib worker pool. A failing
segment is recorded with its provenance and skipped, and the run fails only
when the failure budget is exceeded.
"""

import logging
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.core.config import KltScope, PipelineConfig
from app.core.exceptions import EhgError
from app.database.models.base import BaseSchema
from app.database.models.evaluation import SegmentationMode
from app.database.models.failure import FailureSummary, SegmentFailure
from app.database.models.features import FeatureRow
from app.database.models.record import Group, Record
from app.database.models.signal import BandpassFilter, Segment
from app.database.repositories.record_repository import RecordRepository
from app.services.features.extractor import (
    FeatureSettings,
    denoise_segment,
    extract_segment_features,
    feature_names,
)
from app.services.features.matrix import build_feature_frame
from app.services.signal import klt
from app.services.signal.filtering import design_butterworth_bandpass
from app.services.signal.segmentation import prepare_record, segment_annotated, segment_fixed
from app.utils.failure_tracker import FailureTracker

logger = logging.getLogger(__name__)

RECORD_LEVEL = -1

# Errors a single segment may raise without aborting the run.
RECOVERABLE_ERRORS = (EhgError, ValueError, ArithmeticError)

# (record, segment, window_kind, label, values, stage, error_type, message)
WorkerResult = Tuple[str, int, str, int, Optional[np.ndarray], str, str, str]


class FeatureRun(BaseSchema):
    """Outcome of a dataset-wide extraction."""

    frame: pd.DataFrame
    summary: FailureSummary
    failures: List[SegmentFailure]


def _extract_worker(segment: Segment, settings: FeatureSettings) -> WorkerResult:
    label = 1 if segment.label == Group.PRETERM else 0
    head = (segment.record_name, segment.segment_index, segment.window_kind.value, label)
    stage = "klt"
    try:
        if settings.denoises_segments:
            segment = denoise_segment(segment, settings)
        stage = "features"
        values = extract_segment_features(segment, settings, denoise=False)
    except RECOVERABLE_ERRORS as e:
        return (*head, None, stage, type(e).__name__, str(e))
    return (*head, values, "", "", "")


class FeatureBatchRunner:
    """Turns a record directory into a feature table."""

    def __init__(
        self,
        config: PipelineConfig,
        repository: Optional[RecordRepository] = None,
        tracker: Optional[FailureTracker] = None,
    ):
        """Initialize the runner.

        Args:
            config: Pipeline configuration.
            repository: Record source; defaults to the configured dataset root.
            tracker: Failure tracker; a fresh one with the default budget if None.
        """
        self.config = config
        self.repository = repository or RecordRepository(
            config.dataset.root,
            annotations_file=config.dataset.annotations,
            index_file=config.dataset.index,
        )
        self.settings = FeatureSettings.from_config(config)
        self.tracker = tracker or FailureTracker()
        self.attempted = 0
        self._filters: Dict[float, BandpassFilter] = {}

    def filter_for(self, fs: float) -> BandpassFilter:
        """Band-pass filter for a sampling rate, designed once per rate."""
        if fs not in self._filters:
            self._filters[fs] = design_butterworth_bandpass(
                self.config.filter.order,
                self.config.filter.low_cut_hz,
                self.config.filter.high_cut_hz,
                fs,
            )
        return self._filters[fs]

    def prepare(self, record: Record) -> Record:
        """Select channels, filter, and apply record-scoped KLT when configured."""
        prepared = prepare_record(
            record,
            self.filter_for(record.sampling_rate_hz),
            channel_set=self.config.channels.set,
            use_prefiltered=self.config.dataset.use_prefiltered,
            prefiltered_marker=self.config.dataset.prefiltered_marker,
        )
        if self.settings.klt_enabled and self.settings.klt_scope == KltScope.RECORD:
            denoised = klt.denoise_channels(
                prepared.signals, self.settings.klt_lag, self.settings.klt_threshold
            )
            prepared = prepared.model_copy(update={"signals": denoised})
        return prepared

    def segments_of(self, record: Record, annotations: Dict[str, list]) -> Iterator[Segment]:
        """Segments of one prepared record.

        Annotated intervals are cut one at a time so that a single unusable
        interval is recorded as a failure without losing its neighbours.
        """
        min_length = self.settings.min_segment_length
        if self.config.segmentation.mode == SegmentationMode.FIXED:
            yield from segment_fixed(record, self.config.segmentation.window_seconds, min_length)
            return

        intervals = sorted(annotations.get(record.name, []), key=lambda a: a.start_sample)
        if not intervals:
            logger.debug(f"{record.name}: no annotated intervals")
        for index, interval in enumerate(intervals):
            try:
                (segment,) = segment_annotated(record, [interval], min_length)
            except RECOVERABLE_ERRORS as e:
                self.attempted += 1
                self.tracker.log_failure(record.name, index, "segmentation", e)
                continue
            yield segment.model_copy(update={"segment_index": index})

    def iter_segments(self) -> Iterator[Segment]:
        """All usable segments of the dataset, in record-name order."""
        annotations = (
            self.repository.annotations_by_record()
            if self.config.segmentation.mode == SegmentationMode.ANNOTATED
            else {}
        )
        for name in self.repository.list_record_names():
            try:
                record = self.repository.load_record(name)
                if record.group not in (Group.PRETERM, Group.TERM):
                    logger.info(f"Skipping {name}: group {record.group.value}")
                    continue
                prepared = self.prepare(record)
            except RECOVERABLE_ERRORS as e:
                self.attempted += 1
                self.tracker.log_failure(name, RECORD_LEVEL, "record", e)
                continue
            for segment in self.segments_of(prepared, annotations):
                self.attempted += 1
                yield segment

    def run(self) -> FeatureRun:
        """Extract features for every segment.

        Returns:
        -------
            FeatureRun: The feature table, failure summary and failure log.

        Raises:
        ------
            FailureBudgetExceededError: When too many segments failed.
        """
        jobs = self.config.output.effective_jobs
        logger.info(f"Extracting features from {self.repository.root} with {jobs} worker(s)")
        results = Parallel(n_jobs=jobs)(
            delayed(_extract_worker)(segment, self.settings) for segment in self.iter_segments()
        )

        rows: List[FeatureRow] = []
        for record_name, index, kind, label, values, stage, error_type, message in results:
            if values is None:
                self.tracker.log_failure(record_name, index, stage, message, error_type=error_type)
                continue
            rows.append(
                FeatureRow(
                    record_name=record_name,
                    segment_index=index,
                    window_kind=kind,
                    label=label,
                    values=values,
                )
            )

        rows = self._consistent_width(rows)
        summary = self.tracker.check_budget(self.attempted)
        n_channels = rows[0].values.shape[0] // self.settings.features_per_channel if rows else 0
        frame = build_feature_frame(rows, feature_names(n_channels, self.settings))
        logger.info(
            f"Extracted {len(rows)} of {self.attempted} segments "
            f"({summary.failed_segments} failed)"
        )
        return FeatureRun(frame=frame, summary=summary, failures=self.tracker.failures)

    def _consistent_width(self, rows: List[FeatureRow]) -> List[FeatureRow]:
        """Drop rows whose channel count differs from the first row's."""
        rows = sorted(rows, key=lambda r: (r.record_name, r.segment_index))
        if not rows:
            return rows
        width = rows[0].values.shape[0]
        kept = []
        for row in rows:
            if row.values.shape[0] != width:
                self.tracker.log_failure(
                    row.record_name,
                    row.segment_index,
                    "schema",
                    f"{row.values.shape[0]} features where {width} were expected",
                    error_type="ShapeError",
                )
                continue
            kept.append(row)
        return kept
