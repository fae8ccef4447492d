"""Prediction contract shared by every classifier family.

A binary *head* is trained on 0/1 labels (1 = positive) and exposes
``decision_function`` plus ``predict``. Heads are wrapped either in a
``BinaryClassifier`` (two class codes) or an ``OvrModel`` (one head per class).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from ..domain import ScalerParams
from ..errors import DimensionMismatch, EmptyData, InsufficientClasses, InvalidLabel

# heads whose score is a probability or vote fraction predict positive above this
PROBABILITY_THRESHOLD = 0.5


class BinaryHead(Protocol):
    family: str
    n_features: int

    def decision_function(self, X: np.ndarray) -> np.ndarray: ...

    def predict(self, X: np.ndarray) -> np.ndarray: ...

    def to_payload(self) -> Dict[str, Any]: ...


@dataclass(frozen=True)
class Prediction:
    labels: np.ndarray
    scores: np.ndarray


def as_matrix(X: Any, n_features: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"Expected a 2-D feature array, got {arr.ndim}-D")
    if n_features is not None and arr.shape[1] != n_features:
        raise DimensionMismatch(f"Model expects {n_features} features, got {arr.shape[1]}")
    return arr


def check_training_data(X: Any, y: Any) -> Tuple[np.ndarray, np.ndarray]:
    """Validate a binary training set: 2-D X, 0/1 y, both classes present."""
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if X.shape[0] == 0:
        raise EmptyData("Training set has no rows")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if not np.isin(y, (0, 1)).all():
        raise InvalidLabel("Binary labels must be 0 or 1")
    if np.unique(y).size < 2:
        raise InsufficientClasses("Binary training needs both classes present")
    return X, y


def threshold_scores(scores: np.ndarray, threshold: float) -> np.ndarray:
    """Strictly above the threshold is positive; ties go to 0."""
    return (np.asarray(scores) > threshold).astype(np.int64)


def scale(scaler: Optional[ScalerParams], X: np.ndarray) -> np.ndarray:
    return X if scaler is None else scaler.transform(X)


@dataclass(frozen=True)
class BinaryClassifier:
    """A head trained with ``positive`` as label 1 and ``negative`` as label 0."""

    negative: int
    positive: int
    head: Any

    family = "binary"

    @property
    def classes(self) -> Tuple[int, int]:
        return (self.negative, self.positive)

    @property
    def n_features(self) -> int:
        return int(self.head.n_features)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.head.decision_function(as_matrix(X, self.n_features))

    def predict(self, X: np.ndarray) -> np.ndarray:
        bits = self.head.predict(as_matrix(X, self.n_features))
        return np.where(bits == 1, self.positive, self.negative).astype(np.int64)


def resolve_ovr(scores: np.ndarray, classes: Sequence[int]) -> np.ndarray:
    """Argmax over head scores per row; equal scores resolve to the lowest class code."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    order = np.argsort(np.asarray(classes), kind="stable")
    ordered_codes = np.asarray(classes, dtype=np.int64)[order]
    # np.argmax returns the first maximum, so columns sorted by code break ties low
    return ordered_codes[np.argmax(scores[:, order], axis=1)]


@dataclass(frozen=True)
class OvrModel:
    """One binary head per class; head i scores "class i vs rest"."""

    classes: Tuple[int, ...]
    heads: Tuple[Any, ...]

    family = "ovr"

    def __post_init__(self) -> None:
        if len(self.classes) != len(self.heads) or not self.heads:
            raise ValueError("OvrModel needs exactly one head per class")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("OvrModel classes must be distinct")
        widths = {int(h.n_features) for h in self.heads}
        if len(widths) != 1:
            raise DimensionMismatch(f"OvR heads disagree on feature count: {sorted(widths)}")

    @property
    def n_features(self) -> int:
        return int(self.heads[0].n_features)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        return np.column_stack([head.decision_function(X) for head in self.heads])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return resolve_ovr(self.decision_function(X), self.classes)


Model = Union[BinaryClassifier, OvrModel]


def predict(model: Model, X: Any) -> Prediction:
    """Class codes plus the scores they were derived from (per-head for OvR)."""
    X = as_matrix(X, model.n_features)
    return Prediction(labels=model.predict(X), scores=model.decision_function(X))
