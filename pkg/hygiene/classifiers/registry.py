from __future__ import annotations

import logging
from typing import Any, Callable, Dict, Optional

import numpy as np

from ..domain_schemas import ClassifierParams
from ..errors import InsufficientClasses, InvalidConfig
from ..rng import derive_seed
from .base import BinaryClassifier, Model, OvrModel, as_matrix
from .baseline import train_majority
from .forest import train_forest
from .gnb import train_gnb
from .logreg import train_logreg
from .mlp import train_mlp
from .svm import train_svm
from .tree import train_tree

logger = logging.getLogger(__name__)

HeadTrainer = Callable[[np.ndarray, np.ndarray, ClassifierParams, int], Any]
Trainer = Callable[[np.ndarray, np.ndarray, int], Model]

HEAD_TRAINERS: Dict[str, HeadTrainer] = {
    "svm": lambda X, y, p, s: train_svm(X, y, C=p.C, gamma=p.gamma, seed=s, params=p),
    "dt": lambda X, y, p, s: train_tree(X, y, p),
    "rf": lambda X, y, p, s: train_forest(X, y, p, seed=s),
    "nb": lambda X, y, p, s: train_gnb(X, y, p),
    "lr": lambda X, y, p, s: train_logreg(X, y, p),
    "nn": lambda X, y, p, s: train_mlp(X, y, p, seed=s),
    "majority": lambda X, y, p, s: train_majority(X, y),
}

FAMILY_LABELS: Dict[str, str] = {
    "dt": "DT",
    "rf": "RF",
    "nb": "NB",
    "lr": "LR",
    "svm": "SVM",
    "nn": "NN",
    "majority": "Majority",
}


def train_head(family: str, X: np.ndarray, y01: np.ndarray, params: ClassifierParams, seed: int) -> Any:
    try:
        trainer = HEAD_TRAINERS[family]
    except KeyError as exc:
        raise InvalidConfig(f"Unknown model family: {family}", location="model") from exc
    return trainer(X, y01, params, seed)


def train_model(
    family: str,
    X: np.ndarray,
    y: np.ndarray,
    params: Optional[ClassifierParams] = None,
    seed: int = 0,
) -> Model:
    """Binary model for two class codes, one-vs-rest for three or more."""
    params = params or ClassifierParams()
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    classes = tuple(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise InsufficientClasses(f"Need at least 2 classes, got {list(classes)}", location=family)

    if len(classes) == 2:
        negative, positive = classes
        head = train_head(family, X, (y == positive).astype(np.int64), params, seed)
        return BinaryClassifier(negative=negative, positive=positive, head=head)

    heads = tuple(
        train_head(family, X, (y == code).astype(np.int64), params, derive_seed(seed, code)) for code in classes
    )
    return OvrModel(classes=classes, heads=heads)


def make_trainer(family: str, params: Optional[ClassifierParams] = None) -> Trainer:
    params = params or ClassifierParams()

    def trainer(X: np.ndarray, y: np.ndarray, seed: int) -> Model:
        return train_model(family, X, y, params, seed)

    return trainer
