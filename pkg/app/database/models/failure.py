"""Segment failure models.

This module provides the SegmentFailure model recording why a segment could
not be turned into a feature row, and the summary used for the failure budget.
"""

from typing import Dict, Optional

from app.database.models.base import FrozenSchema


class SegmentFailure(FrozenSchema):
    """A segment that failed feature extraction.

    Attributes:
        record_name: Source record.
        segment_index: Segment position within the record.
        stage: Pipeline stage that failed (e.g. ``klt``, ``features``).
        error_type: Exception class name.
        message: Exception message.
        channel: Channel index when the failure is channel specific.
    """

    record_name: str
    segment_index: int
    stage: str
    error_type: str
    message: str
    channel: Optional[int] = None


class FailureSummary(FrozenSchema):
    """Aggregated failure statistics for one extraction run."""

    total_segments: int
    failed_segments: int
    failure_rate: float
    budget: float
    failures_by_stage: Dict[str, int]
    failures_by_record: Dict[str, int]

    @property
    def within_budget(self) -> bool:
        """True when the failure rate does not exceed the budget."""
        return self.failure_rate <= self.budget
