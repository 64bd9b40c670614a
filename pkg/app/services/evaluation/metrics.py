"""Binary classification metrics with preterm as the positive class."""

import logging
from typing import Optional

import numpy as np
from sklearn.metrics import confusion_matrix, roc_auc_score

from app.core.exceptions import DomainError, ShapeError, UndefinedMetricError
from app.database.models.evaluation import ConfusionCounts, MetricSet

logger = logging.getLogger(__name__)


def _binary(values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values).ravel()
    if not np.all(np.isin(values, (0, 1))):
        raise DomainError(f"{name} must contain only 0 and 1")
    return values.astype(np.int64)


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionCounts:
    """Count true/false positives and negatives.

    Raises:
    ------
        ShapeError: If the inputs differ in length.
        DomainError: If an entry is not 0 or 1.
    """
    y_true = _binary(y_true, "y_true")
    y_pred = _binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.shape[0]} labels, {y_pred.shape[0]} predictions")
    if y_true.size == 0:
        return ConfusionCounts(tp=0, tn=0, fp=0, fn=0)
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return ConfusionCounts(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))


def _ratio(numerator: int, denominator: int, name: str) -> float:
    if denominator == 0:
        logger.debug(f"{name} undefined (zero denominator); reporting 0")
        return 0.0
    return numerator / denominator


def metrics(c: ConfusionCounts, auc: Optional[float] = None) -> MetricSet:
    """Accuracy, precision, recall and F1 from confusion counts.

    Precision and recall are 0 when their denominator is 0, and F1 is 0 when
    precision + recall is 0.

    Raises:
    ------
        DomainError: If the counts are all zero.
    """
    if c.total == 0:
        raise DomainError("metrics need at least one evaluated sample")
    precision = _ratio(c.tp, c.tp + c.fp, "precision")
    recall = _ratio(c.tp, c.tp + c.fn, "recall")
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricSet(
        accuracy=(c.tp + c.tn) / c.total,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=auc,
    )


def roc_auc(scores: np.ndarray, y_true: np.ndarray) -> float:
    """Area under the ROC curve; tied scores count one half.

    Raises:
    ------
        UndefinedMetricError: If only one class is present.
    """
    y_true = _binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.shape != y_true.shape:
        raise ShapeError(f"length mismatch: {scores.shape[0]} scores, {y_true.shape[0]} labels")
    if np.unique(y_true).shape[0] < 2:
        raise UndefinedMetricError("AUC is undefined when only one class is present")
    return float(roc_auc_score(y_true, scores))


def evaluate_scores(
    y_true: np.ndarray, scores: np.ndarray, threshold: float
) -> MetricSet:
    """Full metric set for one scored fold."""
    y_pred = (np.asarray(scores) > threshold).astype(np.int64)
    return metrics(confusion(y_true, y_pred), auc=roc_auc(scores, y_true))
