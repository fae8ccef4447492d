from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..domain_schemas import ClassifierParams
from ..errors import EmptyData, InvalidLabel
from ..rng import make_rng
from .base import PROBABILITY_THRESHOLD, OvrModel, as_matrix, resolve_ovr, threshold_scores
from .tree import TreeModel, grow_tree

logger = logging.getLogger(__name__)


def default_features_per_split(n_features: int) -> int:
    return max(1, math.ceil(math.sqrt(n_features)))


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Bagged CART ensemble; the score is the fraction of trees voting positive."""

    trees: Tuple[TreeModel, ...]
    tree_seeds: Tuple[int, ...]
    bootstrap: bool
    n_features: int

    family = "rf"

    def __post_init__(self) -> None:
        if not self.trees:
            raise ValueError("ForestModel needs at least one tree")

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict(X)
        return votes / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold_scores(self.decision_function(X), PROBABILITY_THRESHOLD)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "trees": [tree.to_payload() for tree in self.trees],
            "tree_seeds": list(self.tree_seeds),
            "bootstrap": self.bootstrap,
            "n_features": self.n_features,
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "ForestModel":
        return cls(
            trees=tuple(TreeModel.from_payload(t) for t in payload["trees"]),
            tree_seeds=tuple(int(s) for s in payload["tree_seeds"]),
            bootstrap=bool(payload["bootstrap"]),
            n_features=int(payload["n_features"]),
        )


def bootstrap_rows(n_rows: int, seed: int) -> np.ndarray:
    return make_rng(seed).integers(0, n_rows, size=n_rows)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: Optional[ClassifierParams] = None,
    seed: int = 0,
) -> ForestModel:
    params = params or ClassifierParams()
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise EmptyData("Forest training set has no rows")
    if not np.isin(y, (0, 1)).all():
        raise InvalidLabel("Binary labels must be 0 or 1")

    n, d = X.shape
    per_split = params.features_per_split or default_features_per_split(d)
    seeds = np.random.SeedSequence(seed).generate_state(params.n_trees, dtype=np.uint32)

    trees = []
    for tree_seed in seeds:
        tree_seed = int(tree_seed)
        rows = bootstrap_rows(n, tree_seed) if params.bootstrap else np.arange(n)
        # the bootstrap draw and the per-split feature draws use separate streams
        split_rng = make_rng(tree_seed + 1)
        trees.append(grow_tree(X[rows], y[rows], params, features_per_split=per_split, rng=split_rng))

    logger.debug("Trained forest: trees=%d rows=%d features_per_split=%d", len(trees), n, per_split)
    return ForestModel(
        trees=tuple(trees),
        tree_seeds=tuple(int(s) for s in seeds),
        bootstrap=params.bootstrap,
        n_features=d,
    )


def oob_scores(forest: ForestModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Out-of-bag vote fraction per row plus a mask of rows some tree left out."""
    if not forest.bootstrap:
        raise ValueError("Out-of-bag scores need a bootstrapped forest")
    X = as_matrix(X, forest.n_features)
    n = X.shape[0]
    votes = np.zeros(n)
    counts = np.zeros(n)
    for tree, tree_seed in zip(forest.trees, forest.tree_seeds):
        out_of_bag = np.ones(n, dtype=bool)
        out_of_bag[bootstrap_rows(n, tree_seed)] = False
        if out_of_bag.any():
            votes[out_of_bag] += tree.predict(X[out_of_bag])
            counts[out_of_bag] += 1
    scored = counts > 0
    return np.divide(votes, counts, out=np.zeros(n), where=scored), scored


def oob_accuracy(forest: ForestModel, X: np.ndarray, y: np.ndarray) -> float:
    """Accuracy of out-of-bag votes; rows inside every bag are skipped."""
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    scores, scored = oob_scores(forest, X)
    if not scored.any():
        raise EmptyData("No out-of-bag rows to score")
    predicted = threshold_scores(scores[scored], PROBABILITY_THRESHOLD)
    return float(np.mean(predicted == y[scored]))


def ovr_oob_accuracy(model: OvrModel, X: np.ndarray, y: np.ndarray) -> float:
    """Multiclass out-of-bag accuracy for a one-vs-rest model with forest heads."""
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    columns = [oob_scores(head, X) for head in model.heads]
    scored = np.logical_and.reduce([mask for _, mask in columns])
    if not scored.any():
        raise EmptyData("No out-of-bag rows to score")
    scores = np.column_stack([s for s, _ in columns])[scored]
    return float(np.mean(resolve_ovr(scores, model.classes) == y[scored]))
