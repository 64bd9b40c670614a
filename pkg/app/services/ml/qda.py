"""Quadratic discriminant analysis with a scale-relative covariance ridge.

Each class gets its own Gaussian. Per-class covariances are regularized as
``S + ridge * trace(S) / d * I`` (never below an absolute floor), which keeps
them invertible when a fold has fewer rows than features.
"""

import logging

import numpy as np
from scipy import linalg
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from app.core.exceptions import NumericalError, UnfittableError

logger = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-6
ABSOLUTE_RIDGE_FLOOR = 1e-12


class RidgeQDA(ClassifierMixin, BaseEstimator):
    """Binary Gaussian classifier with class-specific covariances.

    Attributes:
        ridge: Ridge scale relative to the mean per-feature variance.
        classes_: The two class labels, ascending.
        priors_: Class frequencies in the training data.
        means_: Class means, shape (2, d).
        covariances_: Regularized class covariances, shape (2, d, d).
    """

    def __init__(self, ridge: float = DEFAULT_RIDGE):
        """Initialize the classifier.

        Args:
            ridge: Ridge scale relative to ``trace(S) / d``.
        """
        self.ridge = ridge

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RidgeQDA":
        """Estimate priors, means and regularized covariances.

        Raises:
        ------
            UnfittableError: Unless there are exactly two classes with at least
                two rows each.
            NumericalError: If a regularized covariance is not positive definite.
        """
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise UnfittableError(f"QDA needs two classes, got {self.classes_.shape[0]}")
        n, d = X.shape
        self.n_features_in_ = d

        priors, means, covariances, factors, log_dets = [], [], [], [], []
        for label in self.classes_:
            rows = X[y == label]
            if rows.shape[0] < 2:
                raise UnfittableError(f"class {label} has fewer than 2 rows")
            cov = np.atleast_2d(np.cov(rows, rowvar=False))
            shift = max(self.ridge * float(np.trace(cov)) / d, ABSOLUTE_RIDGE_FLOOR)
            cov = cov + shift * np.eye(d)
            try:
                factor = linalg.cholesky(cov, lower=True)
            except linalg.LinAlgError as e:
                raise NumericalError(f"class {label} covariance is not positive definite") from e

            priors.append(rows.shape[0] / n)
            means.append(rows.mean(axis=0))
            covariances.append(cov)
            factors.append(factor)
            log_dets.append(2.0 * float(np.sum(np.log(np.diag(factor)))))

        self.priors_ = np.array(priors)
        self.means_ = np.vstack(means)
        self.covariances_ = np.stack(covariances)
        self.cholesky_ = np.stack(factors)
        self.log_dets_ = np.array(log_dets)
        logger.debug(f"QDA fitted on {n} rows x {d} features")
        return self

    def _log_posteriors(self, X: np.ndarray) -> np.ndarray:
        # unnormalized log p(c | x), shape (n, 2)
        check_is_fitted(self, "means_")
        X = check_array(X, dtype=np.float64)
        columns = []
        for c in range(2):
            diff = (X - self.means_[c]).T
            z = linalg.solve_triangular(self.cholesky_[c], diff, lower=True)
            mahalanobis = np.sum(z * z, axis=0)
            columns.append(
                np.log(self.priors_[c]) - 0.5 * (self.log_dets_[c] + mahalanobis)
            )
        return np.column_stack(columns)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Log-odds of the second class."""
        g = self._log_posteriors(X)
        return g[:, 1] - g[:, 0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class posteriors, columns ordered as ``classes_``."""
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Second class where its posterior exceeds 0.5."""
        return self.classes_[(self.predict_proba(X)[:, 1] > 0.5).astype(int)]
