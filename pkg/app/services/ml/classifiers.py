"""Model suite behind a single fit / score interface.

Every kind is a scikit-learn compatible estimator. Scale-sensitive kinds
(LR, SVM, MLP) are wrapped in a pipeline that z-scores features with training
statistics; QDA and the tree models consume raw features. Scores are class-1
probabilities except for the SVM, which reports its signed margin.
"""

import logging
import warnings
from typing import Any, Dict, Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.dummy import DummyClassifier
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import Pipeline, make_pipeline
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier
from sklearn.utils.validation import check_array, check_is_fitted

from app.core.exceptions import ShapeError, UnfittableError
from app.database.models.learning import LabeledDataset, ModelKind, ModelSpec, TrainedModel
from app.services.ml.qda import RidgeQDA

logger = logging.getLogger(__name__)

STANDARDIZED_KINDS = frozenset({ModelKind.LR, ModelKind.SVM, ModelKind.MLP})
MARGIN_KINDS = frozenset({ModelKind.SVM})


class FeatureStandardizer(TransformerMixin, BaseEstimator):
    """Per-feature z-score with a zero-variance guard.

    Columns with zero training standard deviation pass through unchanged
    (they are neither centred nor scaled).
    """

    def fit(self, X: np.ndarray, y: Optional[np.ndarray] = None) -> "FeatureStandardizer":
        """Learn the training mean and population standard deviation."""
        X = check_array(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        constant = scale == 0.0
        self.mean_ = np.where(constant, 0.0, mean)
        self.scale_ = np.where(constant, 1.0, scale)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Apply the stored affine map."""
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        return (X - self.mean_) / self.scale_


def standardize_fit_apply(
    X_train: np.ndarray, X_eval: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, Dict[str, np.ndarray]]:
    """Standardize training and evaluation rows with training statistics only.

    Returns:
    -------
        Tuple: Standardized training rows, standardized evaluation rows and
        the stored ``{"mean", "std"}``.
    """
    standardizer = FeatureStandardizer().fit(X_train)
    stats = {"mean": standardizer.mean_, "std": standardizer.scale_}
    return standardizer.transform(X_train), standardizer.transform(X_eval), stats


def build_estimator(spec: ModelSpec) -> BaseEstimator:
    """Instantiate the unfitted estimator for a model specification."""
    params: Dict[str, Any] = dict(spec.hyperparameters)
    kind = spec.kind
    if kind == ModelKind.QDA:
        estimator = RidgeQDA(ridge=params.get("ridge", 1e-6))
    elif kind == ModelKind.LR:
        estimator = LogisticRegression(
            penalty="l2",
            C=params.get("C", 1.0),
            solver="lbfgs",
            max_iter=params.get("max_iter", 5000),
            tol=params.get("tol", 1e-6),
        )
    elif kind == ModelKind.SVM:
        estimator = SVC(kernel="linear", C=params.get("C", 1.0))
    elif kind == ModelKind.DT:
        estimator = DecisionTreeClassifier(
            criterion="gini",
            max_depth=params.get("max_depth", 100),
            min_samples_split=params.get("min_samples_split", 2),
            random_state=spec.seed,
        )
    elif kind == ModelKind.RF:
        estimator = RandomForestClassifier(
            n_estimators=params.get("n_estimators", 100),
            max_depth=params.get("max_depth", 10),
            max_features=params.get("max_features", "sqrt"),
            bootstrap=True,
            random_state=spec.seed,
            n_jobs=1,
        )
    elif kind == ModelKind.GB:
        estimator = GradientBoostingClassifier(
            n_estimators=params.get("n_estimators", 100),
            learning_rate=params.get("learning_rate", 0.1),
            max_depth=params.get("max_depth", 3),
            random_state=spec.seed,
        )
    elif kind == ModelKind.MLP:
        estimator = MLPClassifier(
            hidden_layer_sizes=(params.get("hidden_units", 100),),
            activation="relu",
            solver="adam",
            learning_rate_init=params.get("learning_rate", 1e-3),
            max_iter=params.get("max_iter", 200),
            random_state=spec.seed,
        )
    else:
        raise ValueError(f"unknown model kind: {kind}")

    if kind in STANDARDIZED_KINDS:
        return make_pipeline(FeatureStandardizer(), estimator)
    return estimator


def _check_trainable(data: LabeledDataset) -> None:
    if data.n_features < 1:
        raise UnfittableError("training data has no features")
    counts = np.bincount(data.y.astype(int), minlength=2)
    if np.any(counts < 2):
        raise UnfittableError(
            f"training data needs at least 2 rows of each class, got {counts.tolist()}"
        )


def fit(spec: ModelSpec, data: LabeledDataset) -> TrainedModel:
    """Train one classifier.

    Training data whose features are all constant carries no information; a
    prior-only model predicting the majority class is returned for it.

    Args:
        spec: Model kind, hyperparameters and seed.
        data: Training rows.

    Returns:
    -------
        TrainedModel: The fitted model.

    Raises:
    ------
        UnfittableError: If a class has fewer than two rows.
    """
    _check_trainable(data)
    if np.all(np.ptp(data.X, axis=0) == 0.0):
        logger.warning(f"{spec.kind.value}: all features constant; using a prior-only model")
        dummy = DummyClassifier(strategy="prior").fit(data.X, data.y)
        return TrainedModel(
            kind=spec.kind, estimator=dummy, n_features=data.n_features, prior_only=True
        )

    estimator = build_estimator(spec)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        estimator.fit(data.X, data.y)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        logger.debug(f"{spec.kind.value} stopped at its iteration cap before converging")

    standardization = None
    if isinstance(estimator, Pipeline):
        standardizer = estimator.steps[0][1]
        standardization = {"mean": standardizer.mean_, "std": standardizer.scale_}
    return TrainedModel(
        kind=spec.kind,
        estimator=estimator,
        n_features=data.n_features,
        score_threshold=0.0 if spec.kind in MARGIN_KINDS else 0.5,
        feature_standardization=standardization,
    )


def _check_features(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(
            f"model trained on {model.n_features} features, got shape {X.shape}"
        )
    return X


def predict_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Ranking scores per row.

    Returns:
    -------
        np.ndarray: Class-1 probabilities, or signed margins for the SVM.

    Raises:
    ------
        ShapeError: If the feature count differs from training.
    """
    X = _check_features(model, X)
    if model.kind in MARGIN_KINDS and not model.prior_only:
        return np.asarray(model.estimator.decision_function(X), dtype=np.float64)
    column = list(model.estimator.classes_).index(1)
    return np.asarray(model.estimator.predict_proba(X)[:, column], dtype=np.float64)


def hard_labels(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Binary predictions from thresholding ``predict_scores`` at the model's cut."""
    return (predict_scores(model, X) > model.score_threshold).astype(np.int64)


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """The underlying estimator's own hard predictions."""
    X = _check_features(model, X)
    return np.asarray(model.estimator.predict(X), dtype=np.int64)
