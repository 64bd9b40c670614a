"""Failure tracking for per-segment feature extraction.

This module records segments that could not be turned into feature rows,
summarizes them by stage and record, and enforces the failure budget that
decides whether an extraction run as a whole succeeds.
"""

import json
import logging
from collections import Counter
from typing import Dict, List, Optional, Union

from app.core.exceptions import FailureBudgetExceededError
from app.database.models.failure import FailureSummary, SegmentFailure

logger = logging.getLogger(__name__)

DEFAULT_FAILURE_BUDGET = 0.01


class FailureTracker:
    """Collects segment failures for one extraction run.

    Unlike a process-wide log, each run owns its tracker so that parallel or
    repeated runs never see each other's failures.
    """

    def __init__(self, budget: float = DEFAULT_FAILURE_BUDGET):
        """Initialize an empty tracker.

        Args:
            budget: Largest tolerated fraction of failed segments.
        """
        if not 0.0 <= budget <= 1.0:
            raise ValueError(f"failure budget must be in [0, 1], got {budget}")
        self.budget = budget
        self._failures: List[SegmentFailure] = []

    @property
    def failures(self) -> List[SegmentFailure]:
        """Recorded failures in the order they were logged."""
        return list(self._failures)

    def __len__(self) -> int:
        """Number of recorded failures."""
        return len(self._failures)

    def log_failure(
        self,
        record_name: str,
        segment_index: int,
        stage: str,
        error: Union[BaseException, str],
        error_type: Optional[str] = None,
        channel: Optional[int] = None,
    ) -> SegmentFailure:
        """Record one failed segment.

        Args:
            record_name: Source record.
            segment_index: Segment position, or -1 for a whole-record failure.
            stage: Pipeline stage that raised.
            error: The exception, or its message when it was caught in a worker.
            error_type: Exception class name when ``error`` is a message.
            channel: Channel index when known.

        Returns:
        -------
            SegmentFailure: The stored entry.
        """
        if isinstance(error, BaseException):
            error_type = error_type or type(error).__name__
            message = str(error)
        else:
            message = error
        failure = SegmentFailure(
            record_name=record_name,
            segment_index=segment_index,
            stage=stage,
            error_type=error_type or "Error",
            message=message,
            channel=channel,
        )
        self._failures.append(failure)
        logger.error(
            f"Segment failed: {record_name}#{segment_index} | {stage} | "
            f"{failure.error_type}: {message}"
        )
        return failure

    def get_summary(self, total_segments: int) -> FailureSummary:
        """Summarize failures against the number of attempted segments."""
        failed = len(self._failures)
        rate = failed / total_segments if total_segments > 0 else 0.0
        return FailureSummary(
            total_segments=total_segments,
            failed_segments=failed,
            failure_rate=rate,
            budget=self.budget,
            failures_by_stage=dict(Counter(f.stage for f in self._failures)),
            failures_by_record=dict(Counter(f.record_name for f in self._failures)),
        )

    def check_budget(self, total_segments: int) -> FailureSummary:
        """Return the summary, raising if the failure rate exceeds the budget.

        Raises:
        ------
            FailureBudgetExceededError: When more than ``budget`` of the
                segments failed.
        """
        summary = self.get_summary(total_segments)
        if not summary.within_budget:
            raise FailureBudgetExceededError(
                f"{summary.failed_segments} of {total_segments} segments failed "
                f"({summary.failure_rate:.2%} > {self.budget:.2%})"
            )
        if summary.failed_segments:
            logger.info(
                f"{summary.failed_segments} of {total_segments} segments failed; "
                f"within the {self.budget:.2%} budget"
            )
        return summary

    def export_failures(self, format: str = "json") -> Union[str, List[Dict]]:
        """Export the failure log.

        Args:
            format: ``json`` for a JSON string or ``dict`` for a list of dicts.
        """
        records = [failure.model_dump() for failure in self._failures]
        if format == "json":
            return json.dumps(records, indent=2)
        if format == "dict":
            return records
        raise ValueError(f"unsupported export format: {format}")

    def clear(self) -> None:
        """Forget all recorded failures."""
        self._failures.clear()
