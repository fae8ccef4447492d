from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..domain_schemas import ClassifierParams
from ..errors import EmptyData, InvalidLabel
from .base import PROBABILITY_THRESHOLD, as_matrix, check_training_data, threshold_scores

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    impurity: float


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity per row of a (..., 2) count array; empty rows score 0."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    p = counts / safe[..., None]
    return 1.0 - np.sum(p * p, axis=-1)


def best_split(X: np.ndarray, y: np.ndarray, features: Sequence[int]) -> Optional[Split]:
    """Exhaustive midpoint search minimising weighted child Gini.

    Features are scanned in the given order and thresholds ascending; only a
    strictly better impurity replaces the incumbent.
    """
    n = y.size
    best: Optional[Split] = None
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        # candidate cut after position k where the sorted value changes
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if cut.size == 0:
            continue
        pos_left = np.cumsum(ys)[cut]
        n_left = cut + 1
        left = np.column_stack([n_left - pos_left, pos_left])
        right = np.column_stack([(n - n_left) - (ys.sum() - pos_left), ys.sum() - pos_left])
        weighted = (n_left * gini(left) + (n - n_left) * gini(right)) / n
        k = int(np.argmin(weighted))
        if best is None or weighted[k] < best.impurity:
            threshold = (xs[cut[k]] + xs[cut[k] + 1]) / 2.0
            # midpoint can round up to the right value for adjacent doubles
            if threshold >= xs[cut[k] + 1]:
                threshold = float(xs[cut[k]])
            best = Split(feature=int(f), threshold=float(threshold), impurity=float(weighted[k]))
    return best


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Binary CART stored as flat node arrays; ``feature == -1`` marks a leaf.

    ``value`` holds the fraction of positive training rows at each node, which is
    the decision score; ``node_class`` the majority label (ties to 0).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    family = "dt"

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    @property
    def node_class(self) -> np.ndarray:
        return threshold_scores(self.value, PROBABILITY_THRESHOLD)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row (left when ``x <= threshold``)."""
        X = as_matrix(X, self.n_features)
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[nodes] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = nodes[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            nodes[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[nodes] != LEAF
        return nodes

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.node_class[self.apply(X)]

    def to_payload(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "TreeModel":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            value=np.asarray(payload["value"], dtype=np.float64),
            n_features=int(payload["n_features"]),
        )


class _TreeBuilder:
    def __init__(
        self,
        max_depth: Optional[int],
        min_split: int,
        features_per_split: Optional[int],
        rng: Optional[np.random.Generator],
    ) -> None:
        self.max_depth = max_depth
        self.min_split = min_split
        self.features_per_split = features_per_split
        self.rng = rng
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def _candidate_features(self, d: int) -> Sequence[int]:
        if self.features_per_split is None or self.features_per_split >= d or self.rng is None:
            return range(d)
        return np.sort(self.rng.choice(d, size=self.features_per_split, replace=False))

    def _new_node(self, y: np.ndarray) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(float(y.mean()))
        return len(self.feature) - 1

    def build(self, X: np.ndarray, y: np.ndarray) -> TreeModel:
        # iterative depth-first growth; node ids follow creation order
        root = self._new_node(y)
        stack: List[Tuple[int, np.ndarray, int]] = [(root, np.arange(y.size), 0)]
        while stack:
            node, rows, depth = stack.pop()
            ys = y[rows]
            pure = ys.min() == ys.max()
            if pure or rows.size < self.min_split or (self.max_depth is not None and depth >= self.max_depth):
                continue
            split = best_split(X[rows], ys, self._candidate_features(X.shape[1]))
            if split is None:
                continue
            mask = X[rows, split.feature] <= split.threshold
            left_rows, right_rows = rows[mask], rows[~mask]
            left_id = self._new_node(y[left_rows])
            right_id = self._new_node(y[right_rows])
            self.feature[node] = split.feature
            self.threshold[node] = split.threshold
            self.left[node] = left_id
            self.right[node] = right_id
            stack.append((right_id, right_rows, depth + 1))
            stack.append((left_id, left_rows, depth + 1))

        return TreeModel(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=np.float64),
            n_features=int(X.shape[1]),
        )


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    params: ClassifierParams,
    features_per_split: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> TreeModel:
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise EmptyData("Tree training set has no rows")
    return _TreeBuilder(params.max_depth, params.min_split, features_per_split, rng).build(X, y)


def train_tree(X: np.ndarray, y: np.ndarray, params: Optional[ClassifierParams] = None) -> TreeModel:
    params = params or ClassifierParams()
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise EmptyData("Tree training set has no rows")
    if not np.isin(y, (0, 1)).all():
        raise InvalidLabel("Binary labels must be 0 or 1")
    if np.unique(y).size > 1:
        X, y = check_training_data(X, y)
    tree = grow_tree(X, y, params)
    logger.debug("Trained tree: rows=%d nodes=%d depth=%d", y.size, tree.n_nodes, tree.depth)
    return tree
