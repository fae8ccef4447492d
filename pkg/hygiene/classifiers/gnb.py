from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.special import logsumexp

from ..domain_schemas import ClassifierParams
from .base import PROBABILITY_THRESHOLD, as_matrix, check_training_data, threshold_scores


@dataclass(frozen=True, eq=False)
class GnbModel:
    """Per-class priors and per-class per-feature Gaussian mean/variance (rows: class 0, 1)."""

    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    smoothing: float
    n_features: int

    family = "nb"

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        out = np.empty((X.shape[0], self.priors.size))
        for c in range(self.priors.size):
            var = self.variances[c]
            log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * var))
            out[:, c] = np.log(self.priors[c]) + log_norm - 0.5 * np.sum((X - self.means[c]) ** 2 / var, axis=1)
        return out

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Posterior probability of the positive class."""
        jll = self.joint_log_likelihood(X)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold_scores(self.decision_function(X), PROBABILITY_THRESHOLD)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "smoothing": self.smoothing,
            "n_features": self.n_features,
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "GnbModel":
        return cls(
            priors=np.asarray(payload["priors"], dtype=np.float64),
            means=np.asarray(payload["means"], dtype=np.float64),
            variances=np.asarray(payload["variances"], dtype=np.float64),
            smoothing=float(payload["smoothing"]),
            n_features=int(payload["n_features"]),
        )


def train_gnb(X: np.ndarray, y: np.ndarray, params: Optional[ClassifierParams] = None) -> GnbModel:
    params = params or ClassifierParams()
    X, y = check_training_data(X, y)
    widest = float(np.var(X, axis=0).max())
    # an all-constant matrix still needs a positive floor
    smoothing = params.var_smoothing * widest if widest > 0 else params.var_smoothing

    priors = np.empty(2)
    means = np.empty((2, X.shape[1]))
    variances = np.empty((2, X.shape[1]))
    for c in (0, 1):
        rows = X[y == c]
        priors[c] = rows.shape[0] / y.size
        means[c] = rows.mean(axis=0)
        variances[c] = rows.var(axis=0) + smoothing
    return GnbModel(priors=priors, means=means, variances=variances, smoothing=smoothing, n_features=X.shape[1])
