"""Stratified splits and folds, exhaustive 3-of-10 feature selection, seeded random tuning."""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ..classifiers.base import Model
from ..classifiers.registry import make_trainer, train_model
from ..domain import FeatureMatrix
from ..domain_schemas import ClassifierParams, ModelSpec
from ..errors import InvalidConfig, MalformedRow, NoConvergence, TooFewSamples
from ..rng import derive_seed, make_rng
from ..schemas import FoldPlanDocument, SplitPlanDocument
from .metrics_service import EvaluationReport, evaluate_predictions

logger = logging.getLogger(__name__)

Trainer = Callable[[np.ndarray, np.ndarray, int], Model]

LOG10_C_RANGE = (-2.0, 3.0)
LOG10_GAMMA_RANGE = (-3.0, 2.0)
# keeps floor(0.8 * 30) at 24 despite 0.8 * 30 = 23.999999999999996
FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class SplitPlan:
    train: Tuple[int, ...]
    test: Tuple[int, ...]
    seed: int
    ratio: float

    def to_dict(self) -> Dict[str, object]:
        return SplitPlanDocument(train=list(self.train), test=list(self.test), seed=self.seed, ratio=self.ratio).model_dump()


@dataclass(frozen=True)
class FoldPlan:
    folds: Tuple[Tuple[int, ...], ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def splits(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(train, test) index arrays with each fold held out once, in fold order."""
        out = []
        for i, held in enumerate(self.folds):
            rest = sorted(idx for j, fold in enumerate(self.folds) if j != i for idx in fold)
            out.append((np.asarray(rest, dtype=np.int64), np.asarray(held, dtype=np.int64)))
        return out

    def to_dict(self) -> Dict[str, object]:
        return FoldPlanDocument(folds=[list(f) for f in self.folds], seed=self.seed).model_dump()


@dataclass(frozen=True)
class FeatureSubset:
    indices: Tuple[int, ...]
    cv_loss: float
    evaluated: int = 0


@dataclass(frozen=True)
class TuningStep:
    iteration: int
    C: float
    gamma: float
    loss: float
    best_so_far: float


@dataclass(frozen=True)
class TuningResult:
    C: float
    gamma: float
    loss: float
    trace: Tuple[TuningStep, ...] = field(default=())


def _class_rows(labels: Sequence[int]) -> Dict[int, np.ndarray]:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    return {int(c): np.flatnonzero(y == c) for c in np.unique(y)}


def stratified_split(labels: Sequence[int], ratio: float = 0.8, seed: int = 0) -> SplitPlan:
    """Per class: floor(ratio * n) shuffled rows to train, the rest to test."""
    if not 0.0 < ratio < 1.0:
        raise InvalidConfig(f"Split ratio must lie in (0, 1), got {ratio}", location="ratio")
    rng = make_rng(seed)
    train: List[int] = []
    test: List[int] = []
    for code, rows in _class_rows(labels).items():
        n_train = int(math.floor(ratio * rows.size + FLOOR_EPS))
        if n_train < 1 or n_train >= rows.size:
            raise TooFewSamples(
                f"Class {code} has {rows.size} samples; ratio {ratio} leaves an empty side",
                location=f"class {code}",
            )
        shuffled = rng.permutation(rows)
        train.extend(shuffled[:n_train].tolist())
        test.extend(shuffled[n_train:].tolist())
    return SplitPlan(train=tuple(sorted(train)), test=tuple(sorted(test)), seed=seed, ratio=ratio)


def stratified_kfold(labels: Sequence[int], k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle each class, then deal its rows round-robin over the folds.

    The dealing offset carries over from one class to the next, so fold sizes
    stay within one of each other overall as well as per class.
    """
    if k < 2:
        raise InvalidConfig(f"k must be at least 2, got {k}", location="k")
    rng = make_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    offset = 0
    for code, rows in _class_rows(labels).items():
        if rows.size < k:
            raise TooFewSamples(f"Class {code} has {rows.size} samples, fewer than k={k}", location=f"class {code}")
        for pos, idx in enumerate(rng.permutation(rows)):
            folds[(offset + pos) % k].append(int(idx))
        offset = (offset + rows.size) % k
    return FoldPlan(folds=tuple(tuple(sorted(f)) for f in folds), seed=seed)


def cv_loss(trainer: Trainer, X: np.ndarray, y: np.ndarray, plan: FoldPlan, seed: int = 0) -> float:
    """Mean misclassification rate over the plan's folds."""
    errors = []
    for fold, (train_idx, test_idx) in enumerate(plan.splits()):
        model = trainer(X[train_idx], y[train_idx], derive_seed(seed, fold))
        errors.append(float(np.mean(model.predict(X[test_idx]) != y[test_idx])))
    return float(np.mean(errors))


def select_best_features(
    X: np.ndarray,
    y: np.ndarray,
    trainer: Trainer,
    fold_plan: FoldPlan,
    subset_size: int = 3,
    seed: int = 0,
) -> FeatureSubset:
    """Score every ``subset_size`` combination of columns by CV loss.

    Combinations are visited in lexicographic order and only a strictly lower
    loss replaces the incumbent, so ties keep the smallest index tuple. Returned
    indices are 1-based.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    best: Optional[Tuple[int, ...]] = None
    best_loss = math.inf
    evaluated = 0
    for combo in itertools.combinations(range(X.shape[1]), subset_size):
        loss = cv_loss(trainer, X[:, combo], y, fold_plan, seed)
        evaluated += 1
        logger.debug("Feature subset: features=%s cv_loss=%.4f", [c + 1 for c in combo], loss)
        if loss < best_loss:
            best, best_loss = combo, loss
    if best is None:
        raise TooFewSamples(f"No {subset_size}-feature subsets among {X.shape[1]} columns", location="features")
    subset = FeatureSubset(indices=tuple(c + 1 for c in best), cv_loss=best_loss, evaluated=evaluated)
    logger.info("Selected features: features=%s cv_loss=%.4f evaluated=%d", list(subset.indices), best_loss, evaluated)
    return subset


def tune_hyperparameters(
    X: np.ndarray,
    y: np.ndarray,
    budget: int = 30,
    seed: int = 0,
    fold_plan: Optional[FoldPlan] = None,
    params: Optional[ClassifierParams] = None,
) -> TuningResult:
    """Seeded random search over log-uniform C and gamma for the RBF SVM."""
    if budget < 1:
        raise InvalidConfig(f"Tuning budget must be at least 1, got {budget}", location="budget")
    params = params or ClassifierParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    plan = fold_plan or stratified_kfold(y, 5, seed)
    rng = make_rng(derive_seed(seed, 2))

    trace: List[TuningStep] = []
    best: Optional[Tuple[float, float, float]] = None
    for iteration in range(1, budget + 1):
        C = float(10.0 ** rng.uniform(*LOG10_C_RANGE))
        gamma = float(10.0 ** rng.uniform(*LOG10_GAMMA_RANGE))
        trainer = make_trainer("svm", params.model_copy(update={"C": C, "gamma": gamma}))
        try:
            loss = cv_loss(trainer, X, y, plan, seed)
        except NoConvergence as exc:
            # a draw the solver cannot finish scores as the worst possible loss
            logger.warning("Tuning draw did not converge: iteration=%d C=%.4g gamma=%.4g error=%s", iteration, C, gamma, exc)
            loss = 1.0
        if best is None or loss < best[2]:
            best = (C, gamma, loss)
        trace.append(TuningStep(iteration=iteration, C=C, gamma=gamma, loss=loss, best_so_far=best[2]))
        logger.debug("Tuning step: iteration=%d C=%.4g gamma=%.4g loss=%.4f best=%.4f", iteration, C, gamma, loss, best[2])

    C, gamma, loss = best
    logger.info("Tuned hyperparameters: C=%.4g gamma=%.4g cv_loss=%.4f budget=%d", C, gamma, loss, budget)
    return TuningResult(C=C, gamma=gamma, loss=loss, trace=tuple(trace))


@dataclass(frozen=True)
class InputChoice:
    """Columns and parameters picked for a ModelSpec from one set of rows."""

    feature_indices: Tuple[int, ...]
    params: ClassifierParams
    subset: Optional[FeatureSubset] = None
    tuning: Optional[TuningResult] = None


@dataclass(frozen=True)
class FittedSpec:
    model: Model
    choice: InputChoice

    @property
    def feature_indices(self) -> Tuple[int, ...]:
        return self.choice.feature_indices


def choose_inputs(spec: ModelSpec, matrix: FeatureMatrix, seed: int = 0, k: int = 5) -> InputChoice:
    """Run feature selection and tuning (when the ModelSpec asks) on ``matrix`` alone.

    Selection scores subsets with the ModelSpec's own family and parameters; tuning
    then searches C and gamma over the selected columns.
    """
    params = spec.params
    X, y = matrix.values, matrix.labels
    indices = matrix.feature_indices
    subset: Optional[FeatureSubset] = None
    tuning: Optional[TuningResult] = None
    tune = spec.tune and spec.family == "svm"
    if not (spec.select_features or tune):
        return InputChoice(feature_indices=indices, params=params)

    plan = stratified_kfold(y, k, derive_seed(seed, 3))
    if spec.select_features:
        subset = select_best_features(X, y, make_trainer(spec.family, params), plan, spec.subset_size, seed)
        selected = matrix.select(subset.indices)
        X, indices = selected.values, selected.feature_indices
    if tune:
        tuning = tune_hyperparameters(X, y, spec.budget, seed, plan, params)
        params = params.model_copy(update={"C": tuning.C, "gamma": tuning.gamma})
    return InputChoice(feature_indices=tuple(indices), params=params, subset=subset, tuning=tuning)


def train_with_choice(spec: ModelSpec, choice: InputChoice, matrix: FeatureMatrix, seed: int = 0) -> FittedSpec:
    selected = matrix.select(choice.feature_indices)
    model = train_model(spec.family, selected.values, selected.labels, choice.params, seed)
    return FittedSpec(model=model, choice=choice)


def fit_spec(spec: ModelSpec, matrix: FeatureMatrix, seed: int = 0, k: int = 5) -> FittedSpec:
    """Choose inputs on ``matrix`` and train on all of its rows."""
    return train_with_choice(spec, choose_inputs(spec, matrix, seed, k), matrix, seed)


def cross_validate(
    spec: ModelSpec,
    matrix: FeatureMatrix,
    fold_plan: FoldPlan,
    seed: int = 0,
    classes: Optional[Sequence[int]] = None,
) -> List[EvaluationReport]:
    """One report per fold; selection, tuning and scaling see only the fold's training rows."""
    classes = tuple(classes) if classes is not None else matrix.classes
    reports: List[EvaluationReport] = []
    for fold, (train_idx, test_idx) in enumerate(fold_plan.splits()):
        fitted = fit_spec(spec, matrix.take(train_idx), derive_seed(seed, fold), k=fold_plan.k)
        test = matrix.take(test_idx).select(fitted.feature_indices)
        report = evaluate_predictions(test.labels, fitted.model.predict(test.values), classes)
        logger.info("Fold result: family=%s fold=%d accuracy=%.4f test_rows=%d", spec.family, fold, report.accuracy, test.n_rows)
        reports.append(report)
    return reports


def save_plan(plan: SplitPlan | FoldPlan, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(plan.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


def load_plan(path: Path) -> SplitPlan | FoldPlan:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        if "folds" in data:
            doc = FoldPlanDocument.model_validate(data)
            return FoldPlan(folds=tuple(tuple(f) for f in doc.folds), seed=doc.seed)
        split = SplitPlanDocument.model_validate(data)
        return SplitPlan(train=tuple(split.train), test=tuple(split.test), seed=split.seed, ratio=split.ratio)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise MalformedRow(err["msg"], location=f"{path}:{'.'.join(str(i) for i in err['loc'])}") from exc
