from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ..errors import EmptyData, InvalidLabel
from .base import PROBABILITY_THRESHOLD, as_matrix, threshold_scores


@dataclass(frozen=True)
class MajorityModel:
    """Scores every row with the training share of the positive class."""

    positive_rate: float
    n_features: int

    family = "majority"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        return np.full(X.shape[0], self.positive_rate)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold_scores(self.decision_function(X), PROBABILITY_THRESHOLD)

    def to_payload(self) -> Dict[str, Any]:
        return {"positive_rate": self.positive_rate, "n_features": self.n_features}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "MajorityModel":
        return cls(positive_rate=float(payload["positive_rate"]), n_features=int(payload["n_features"]))


def train_majority(X: np.ndarray, y: np.ndarray) -> MajorityModel:
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise EmptyData("Training set has no rows")
    if not np.isin(y, (0, 1)).all():
        raise InvalidLabel("Binary labels must be 0 or 1")
    return MajorityModel(positive_rate=float(y.mean()), n_features=X.shape[1])
