"""Pairwise scenarios, the repeated split-select-tune-evaluate trial and the family comparison."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from ..classifiers.registry import FAMILY_LABELS
from ..domain import FeatureMatrix, HygieneClass
from ..domain_schemas import ModelSpec
from ..errors import InsufficientClasses, InvalidConfig
from ..rng import derive_seed
from .metrics_service import (
    ConfusionMatrix,
    EvaluationReport,
    MeanStd,
    aggregate_folds,
    confusion,
    pool_confusions,
)
from .selection_service import (
    FoldPlan,
    TuningStep,
    choose_inputs,
    cross_validate,
    stratified_kfold,
    stratified_split,
    train_with_choice,
)

logger = logging.getLogger(__name__)

CvScope = Literal["train", "all"]

PAIR_SCENARIOS: Tuple[Tuple[str, HygieneClass, HygieneClass], ...] = (
    ("ks-bf", HygieneClass.KITCHEN_SINK, HygieneClass.BATHROOM_FAUCET),
    ("bf-tf", HygieneClass.BATHROOM_FAUCET, HygieneClass.TOILET_FLUSHING),
    ("tf-ks", HygieneClass.TOILET_FLUSHING, HygieneClass.KITCHEN_SINK),
)


def pair_subset(matrix: FeatureMatrix, a: int, b: int) -> FeatureMatrix:
    rows = np.flatnonzero(np.isin(matrix.labels, (int(a), int(b))))
    if rows.size == 0 or np.unique(matrix.labels[rows]).size < 2:
        raise InsufficientClasses(f"Pair {int(a)}/{int(b)} is not fully present in the matrix", location="pair")
    return matrix.take(rows)


def pairs_for(name: str) -> Tuple[Tuple[str, HygieneClass, HygieneClass], ...]:
    if name == "all":
        return PAIR_SCENARIOS
    for scenario in PAIR_SCENARIOS:
        if scenario[0] == name:
            return (scenario,)
    raise InvalidConfig(f"Unknown pair: {name}", location="pair")


@dataclass(frozen=True)
class TrialAttempt:
    attempt: int
    seed: int
    features: Tuple[int, ...]
    accuracy: float
    test_counts: Dict[int, int]
    misclassified: int
    n_test: int
    confusion: ConfusionMatrix
    C: Optional[float] = None
    gamma: Optional[float] = None
    trace: Tuple[TuningStep, ...] = field(default=())

    def as_dict(self) -> Dict[str, Any]:
        return {
            "attempt": self.attempt,
            "seed": self.seed,
            "features": list(self.features),
            "accuracy": self.accuracy,
            "test_counts": {str(k): v for k, v in self.test_counts.items()},
            "misclassified": self.misclassified,
            "n_test": self.n_test,
            "confusion": self.confusion.as_dict(),
            "C": self.C,
            "gamma": self.gamma,
            "trace": [vars(step) for step in self.trace],
        }


@dataclass(frozen=True)
class TrialReport:
    pair: str
    classes: Tuple[int, ...]
    attempts: Tuple[TrialAttempt, ...]
    pooled: ConfusionMatrix

    @property
    def overall_accuracy(self) -> float:
        return float(np.mean([a.accuracy for a in self.attempts]))

    @property
    def pooled_accuracy(self) -> float:
        return self.pooled.trace / self.pooled.total

    def as_dict(self) -> Dict[str, Any]:
        return {
            "pair": self.pair,
            "classes": list(self.classes),
            "overall_accuracy": self.overall_accuracy,
            "pooled_accuracy": self.pooled_accuracy,
            "pooled_confusion": self.pooled.as_dict(),
            "attempts": [a.as_dict() for a in self.attempts],
        }


def ten_run_trial(
    pair: FeatureMatrix,
    spec: ModelSpec,
    base_seed: int,
    attempts: int = 10,
    ratio: float = 0.8,
    k: int = 5,
    cv_scope: CvScope = "train",
    name: str = "pair",
) -> TrialReport:
    """Each attempt reseeds an 80:20 split, chooses features/params, and scores the test rows.

    ``cv_scope="train"`` runs selection and tuning on the training split only;
    ``"all"`` lets them see every row of the pair before the split model is trained.
    """
    if cv_scope not in ("train", "all"):
        raise InvalidConfig(f"cv_scope must be 'train' or 'all', got {cv_scope}", location="cv_scope")
    classes = pair.classes
    rows: List[TrialAttempt] = []
    for attempt in range(1, attempts + 1):
        seed = derive_seed(base_seed, attempt)
        plan = stratified_split(pair.labels, ratio, seed)
        train = pair.take(plan.train)
        test = pair.take(plan.test)

        choice = choose_inputs(spec, train if cv_scope == "train" else pair, seed, k)
        fitted = train_with_choice(spec, choice, train, seed)
        predicted = fitted.model.predict(test.select(fitted.feature_indices).values)
        cm = confusion(test.labels, predicted, classes)
        tuning = choice.tuning
        rows.append(
            TrialAttempt(
                attempt=attempt,
                seed=seed,
                features=fitted.feature_indices,
                accuracy=cm.trace / cm.total,
                test_counts={c: int(np.sum(test.labels == c)) for c in classes},
                misclassified=cm.misclassified,
                n_test=cm.total,
                confusion=cm,
                C=tuning.C if tuning else None,
                gamma=tuning.gamma if tuning else None,
                trace=tuning.trace if tuning else (),
            )
        )
        logger.info(
            "Trial attempt: pair=%s attempt=%d features=%s accuracy=%.4f misclassified=%d",
            name,
            attempt,
            list(fitted.feature_indices),
            rows[-1].accuracy,
            cm.misclassified,
        )

    report = TrialReport(
        pair=name,
        classes=classes,
        attempts=tuple(rows),
        pooled=pool_confusions([a.confusion for a in rows]),
    )
    logger.info("Trial finished: pair=%s attempts=%d overall_accuracy=%.4f", name, attempts, report.overall_accuracy)
    return report


@dataclass(frozen=True)
class FamilyResult:
    family: str
    folds: Tuple[EvaluationReport, ...]

    @property
    def label(self) -> str:
        return FAMILY_LABELS[self.family]

    @property
    def summary(self) -> Dict[str, MeanStd]:
        return aggregate_folds(self.folds)

    @property
    def pooled(self) -> ConfusionMatrix:
        return pool_confusions([r.confusion for r in self.folds])

    def as_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "label": self.label,
            "summary": {name: {"mean": ms.mean, "std": ms.std} for name, ms in self.summary.items()},
            "pooled_confusion": self.pooled.as_dict(),
            "folds": [r.as_dict() for r in self.folds],
        }


@dataclass(frozen=True)
class CompareReport:
    fold_plan: FoldPlan
    results: Tuple[FamilyResult, ...]

    def result(self, family: str) -> FamilyResult:
        for item in self.results:
            if item.family == family:
                return item
        raise KeyError(family)

    def as_dict(self) -> Dict[str, Any]:
        return {"fold_plan": self.fold_plan.to_dict(), "results": [r.as_dict() for r in self.results]}


def compare_families(
    matrix: FeatureMatrix,
    specs: Sequence[ModelSpec],
    k: int = 5,
    seed: int = 0,
) -> CompareReport:
    """Cross-validate every ModelSpec on one shared stratified fold plan."""
    plan = stratified_kfold(matrix.labels, k, seed)
    results = []
    for spec in specs:
        reports = cross_validate(spec, matrix, plan, seed, classes=matrix.classes)
        result = FamilyResult(family=spec.family, folds=tuple(reports))
        summary = result.summary
        logger.info(
            "Compared family: family=%s accuracy=%s recall=%s precision=%s",
            result.label,
            summary["accuracy"],
            summary["recall_macro"],
            summary["precision_macro"],
        )
        results.append(result)
    return CompareReport(fold_plan=plan, results=tuple(results))
