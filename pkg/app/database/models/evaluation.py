"""Evaluation models.

Schemas for confusion counts, metric sets, the experiment plan and the final
report produced by the cross-validation harness, and the ablation grid cell.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import Field, model_validator

from app.database.models.base import BaseSchema, FrozenSchema

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "auc")


class DatasetKind(str, Enum):
    """Supported PhysioNet databases."""

    TPEHGT = "TPEHGT"
    TPEHG = "TPEHG"


class SegmentationMode(str, Enum):
    """Segmentation regime."""

    ANNOTATED = "annotated"
    FIXED = "fixed"


class ChannelSet(str, Enum):
    """Channels fed to feature extraction."""

    EHG_ONLY = "ehg_only"
    EHG_PLUS_TOCO = "ehg_plus_toco"


class ConfusionCounts(FrozenSchema):
    """Binary confusion counts with preterm as the positive class."""

    tp: int = Field(ge=0)
    tn: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)

    @property
    def total(self) -> int:
        """Number of evaluated samples."""
        return self.tp + self.tn + self.fp + self.fn


class MetricSet(FrozenSchema):
    """Accuracy, precision, recall, F1 and (when scored) AUC."""

    accuracy: float = Field(ge=0.0, le=1.0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    auc: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    def as_dict(self) -> Dict[str, float]:
        """Metric values keyed by metric name, omitting a missing AUC."""
        values = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.auc is not None:
            values["auc"] = self.auc
        return values


class ExperimentPlan(FrozenSchema):
    """Protocol parameters echoed into every report."""

    n_iterations: int = Field(default=20, ge=1)
    k_folds: int = Field(default=5, ge=2)
    master_seed: int = Field(default=0, ge=0)
    dataset_kind: DatasetKind = DatasetKind.TPEHGT
    segmentation: SegmentationMode = SegmentationMode.ANNOTATED
    channel_set: ChannelSet = ChannelSet.EHG_PLUS_TOCO
    klt_enabled: bool = True
    grouped_by_record: bool = False


class CellResult(FrozenSchema):
    """Metrics of one model on one (iteration, fold) cell."""

    iteration: int
    fold: int
    model: str
    metrics: MetricSet


class MetricSummary(FrozenSchema):
    """Mean and standard deviation of one metric for one model."""

    model: str
    metric: str
    mean: float
    sd: float
    minimum: float
    maximum: float

    @model_validator(mode="after")
    def validate_range(self) -> "MetricSummary":
        """Mean must lie within the observed cell range."""
        tolerance = 1e-12
        if not (self.minimum - tolerance <= self.mean <= self.maximum + tolerance):
            raise ValueError(
                f"mean {self.mean} outside [{self.minimum}, {self.maximum}] for "
                f"{self.model}/{self.metric}"
            )
        return self


class EvalReport(BaseSchema):
    """Aggregated evaluation result.

    Attributes:
        plan: The experiment plan that produced the report.
        models: Model labels in report order.
        summaries: Mean/sd per (model, metric).
        cells: Raw per-cell metrics, sorted by (iteration, fold, model).
        balanced_rows: Rows per iteration after balanced subsampling.
        class_counts: Rows per class before subsampling.
        notes: Free-text caveats attached to the run.
    """

    plan: ExperimentPlan
    models: List[str]
    summaries: List[MetricSummary]
    cells: List[CellResult] = Field(default_factory=list)
    balanced_rows: int = 0
    class_counts: Dict[str, int] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    def summary_for(self, model: str, metric: str) -> MetricSummary:
        """Look up one summary row.

        Raises:
        ------
            KeyError: If the (model, metric) pair is not in the report.
        """
        for summary in self.summaries:
            if summary.model == model and summary.metric == metric:
                return summary
        raise KeyError(f"no summary for {model}/{metric}")


class AblationCell(FrozenSchema):
    """One regime of an ablation run."""

    segmentation: SegmentationMode
    klt_enabled: bool
    toco: bool

    @property
    def label(self) -> str:
        """Directory-safe name, e.g. ``annotated-klt_on-toco_off``."""
        klt = "on" if self.klt_enabled else "off"
        toco = "on" if self.toco else "off"
        return f"{self.segmentation.value}-klt_{klt}-toco_{toco}"

    @property
    def channel_set(self) -> ChannelSet:
        """Channel set implied by the TOCO switch."""
        return ChannelSet.EHG_PLUS_TOCO if self.toco else ChannelSet.EHG_ONLY
