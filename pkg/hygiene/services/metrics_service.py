from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from ..domain import CLASS_CODES
from ..errors import EmptyMatrix, InvalidLabel, LengthMismatch

logger = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "recall_macro", "precision_macro")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts indexed ``[true][predicted]`` over ``classes`` in code order."""

    classes: Tuple[int, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    @property
    def misclassified(self) -> int:
        return self.total - self.trace

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise LengthMismatch(f"Cannot pool confusion matrices over {self.classes} and {other.classes}")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def as_dict(self) -> Dict[str, Any]:
        return {"classes": list(self.classes), "counts": self.counts.tolist()}


def confusion(y_true: Sequence[int], y_pred: Sequence[int], classes: Sequence[int] = CLASS_CODES) -> ConfusionMatrix:
    t = np.asarray(y_true, dtype=np.int64).reshape(-1)
    p = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} true labels but {p.size} predictions")
    if t.size == 0:
        raise LengthMismatch("Confusion needs at least one event")
    classes = tuple(int(c) for c in classes)
    position = {code: i for i, code in enumerate(classes)}
    unknown = sorted((set(t.tolist()) | set(p.tolist())) - set(classes))
    if unknown:
        raise InvalidLabel(f"Labels {unknown} are not among classes {list(classes)}")
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    rows = np.array([position[v] for v in t.tolist()], dtype=np.int64)
    cols = np.array([position[v] for v in p.tolist()], dtype=np.int64)
    np.add.at(counts, (rows, cols), 1)
    return ConfusionMatrix(classes, counts)


def macro_metrics(cm: ConfusionMatrix) -> Dict[str, float]:
    """Accuracy plus recall/precision averaged over classes seen in truth or prediction.

    A class never predicted contributes precision 0; one never true contributes recall 0.
    """
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise EmptyMatrix("Confusion matrix has no events")
    tp = np.diag(counts)
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    present = (rows > 0) | (cols > 0)
    recall = np.divide(tp, rows, out=np.zeros_like(tp), where=rows > 0)
    precision = np.divide(tp, cols, out=np.zeros_like(tp), where=cols > 0)
    return {
        "accuracy": float(tp.sum() / total),
        "recall_macro": float(recall[present].mean()),
        "precision_macro": float(precision[present].mean()),
    }


@dataclass(frozen=True)
class EvaluationReport:
    confusion: ConfusionMatrix
    accuracy: float
    recall_macro: float
    precision_macro: float
    misclassified: int

    def metric(self, name: str) -> float:
        return float(getattr(self, name))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "confusion": self.confusion.as_dict(),
            "accuracy": self.accuracy,
            "recall_macro": self.recall_macro,
            "precision_macro": self.precision_macro,
            "misclassified": self.misclassified,
        }


def report_from_confusion(cm: ConfusionMatrix) -> EvaluationReport:
    metrics = macro_metrics(cm)
    return EvaluationReport(confusion=cm, misclassified=cm.misclassified, **metrics)


def evaluate_predictions(
    y_true: Sequence[int],
    y_pred: Sequence[int],
    classes: Sequence[int] = CLASS_CODES,
) -> EvaluationReport:
    return report_from_confusion(confusion(y_true, y_pred, classes))


@dataclass(frozen=True)
class MeanStd:
    mean: float
    std: float

    def __str__(self) -> str:
        return format_mean_std(self.mean, self.std)


def aggregate_folds(reports: Sequence[EvaluationReport]) -> Dict[str, MeanStd]:
    """Mean and population std of every metric across folds."""
    if not reports:
        raise EmptyMatrix("No fold reports to aggregate")
    out: Dict[str, MeanStd] = {}
    for name in METRIC_NAMES:
        values = np.array([r.metric(name) for r in reports])
        out[name] = MeanStd(mean=float(values.mean()), std=float(values.std()))
    return out


def format_mean_std(mean: float, std: float) -> str:
    """``1.0 ± 0.00`` style: the mean drops trailing zeros down to one decimal."""
    text = f"{mean:.2f}"
    if text.endswith("0"):
        text = text[:-1]
    return f"{text} ± {std:.2f}"


def format_percent(value: float) -> str:
    return f"{value * 100:.2f}%"


def pool_confusions(matrices: Sequence[ConfusionMatrix]) -> ConfusionMatrix:
    if not matrices:
        raise EmptyMatrix("No confusion matrices to pool")
    pooled = matrices[0]
    for cm in matrices[1:]:
        pooled = pooled + cm
    return pooled
