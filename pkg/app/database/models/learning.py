"""Learning models: datasets, model specifications and trained models."""

from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import Field, model_validator

from app.database.models.base import FrozenSchema


class ModelKind(str, Enum):
    """Supported classifier families."""

    QDA = "QDA"
    LR = "LR"
    SVM = "SVM"
    DT = "DT"
    RF = "RF"
    GB = "GB"
    MLP = "MLP"


# Reporting label under which gradient boosting is repeated, standing in for
# the CatBoost row of the benchmark tables.
CB_SUBSTITUTE_LABEL = "CB-substitute"


class Provenance(FrozenSchema):
    """Where a dataset row came from."""

    record_name: str
    segment_index: int


class LabeledDataset(FrozenSchema):
    """Feature matrix with binary labels (1 = preterm) and row provenance."""

    X: np.ndarray
    y: np.ndarray
    provenance: List[Provenance]
    feature_names: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_dataset(self) -> "LabeledDataset":
        """Check row counts, label values and finiteness."""
        if self.X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n = self.X.shape[0]
        if self.y.shape != (n,) or len(self.provenance) != n:
            raise ValueError(
                f"row counts disagree: X={n}, y={self.y.shape[0]}, "
                f"provenance={len(self.provenance)}"
            )
        if not np.all(np.isin(self.y, (0, 1))):
            raise ValueError("labels must be 0 (term) or 1 (preterm)")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("feature matrix contains NaN or Inf")
        if self.feature_names and len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names must match the number of columns")
        return self

    @property
    def n_samples(self) -> int:
        """Number of rows."""
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        """Number of feature columns."""
        return int(self.X.shape[1])

    def subset(self, rows: np.ndarray) -> "LabeledDataset":
        """Return the dataset restricted to ``rows``."""
        return LabeledDataset(
            X=self.X[rows],
            y=self.y[rows],
            provenance=[self.provenance[i] for i in rows],
            feature_names=self.feature_names,
        )


class ModelSpec(FrozenSchema):
    """Which classifier to train and how."""

    kind: ModelKind
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0


class TrainedModel(FrozenSchema):
    """A fitted classifier.

    Attributes:
        kind: Model family.
        estimator: Fitted scikit-learn compatible estimator (a pipeline when
            standardization applies).
        n_features: Feature count seen during training.
        score_threshold: Natural cut on ``predict_scores`` output (0.5 for
            probabilities, 0 for signed margins).
        feature_standardization: Training (mean, std) per feature when applicable.
        prior_only: True when degenerate data forced a majority-class model.
    """

    kind: ModelKind
    estimator: Any
    n_features: int
    score_threshold: float = 0.5
    feature_standardization: Optional[Dict[str, np.ndarray]] = None
    prior_only: bool = False
