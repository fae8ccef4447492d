from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hygiene.classifiers.registry import make_trainer
from hygiene.domain import FeatureMatrix
from hygiene.domain_schemas import ClassifierParams, ModelSpec
from hygiene.errors import InvalidConfig, TooFewSamples
from hygiene.services.selection_service import (
    LOG10_C_RANGE,
    LOG10_GAMMA_RANGE,
    cross_validate,
    fit_spec,
    load_plan,
    save_plan,
    select_best_features,
    stratified_kfold,
    stratified_split,
    tune_hyperparameters,
)


def _planted(seed: int, n: int = 120):
    """Label depends on x1 + x2 + x10 only; rows near the boundary are dropped."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(4 * n, 10))
    s = X[:, 0] + X[:, 1] + X[:, 9]
    keep = np.flatnonzero(np.abs(s) > 0.5)
    pos = keep[s[keep] > 0][: n // 2]
    neg = keep[s[keep] < 0][: n // 2]
    rows = np.concatenate([neg, pos])
    return X[rows], np.repeat([0, 1], [neg.size, pos.size])


# --- splits and folds


def test_stratified_split_sizes_and_disjointness() -> None:
    labels = np.repeat([0, 1, 2], 30)
    plan = stratified_split(labels, 0.8, seed=3)
    assert set(plan.train).isdisjoint(plan.test)
    assert sorted(plan.train + plan.test) == list(range(90))
    assert np.bincount(labels[list(plan.train)]).tolist() == [24, 24, 24]
    assert np.bincount(labels[list(plan.test)]).tolist() == [6, 6, 6]


def test_pairwise_split_gives_48_and_12() -> None:
    labels = np.repeat([0, 1], 30)
    plan = stratified_split(labels, 0.8, seed=0)
    assert (len(plan.train), len(plan.test)) == (48, 12)
    assert np.bincount(labels[list(plan.train)]).tolist() == [24, 24]


def test_stratified_split_is_a_function_of_seed() -> None:
    labels = np.repeat([0, 1], 20)
    assert stratified_split(labels, 0.8, 5) == stratified_split(labels, 0.8, 5)
    assert stratified_split(labels, 0.8, 5).train != stratified_split(labels, 0.8, 6).train


def test_stratified_split_rejects_bad_inputs() -> None:
    with pytest.raises(TooFewSamples):
        stratified_split([0, 0, 0, 1], 0.8, 0)
    with pytest.raises(InvalidConfig):
        stratified_split([0, 1, 0, 1], 1.0, 0)


def test_kfold_partitions_rows_with_balanced_classes() -> None:
    labels = np.repeat([0, 1, 2], [23, 17, 31])
    plan = stratified_kfold(labels, 5, seed=2)
    assert plan.k == 5
    flat = sorted(i for fold in plan.folds for i in fold)
    assert flat == list(range(labels.size))
    sizes = [len(f) for f in plan.folds]
    assert max(sizes) - min(sizes) <= 1
    for code in (0, 1, 2):
        per_fold = [int(np.sum(labels[list(f)] == code)) for f in plan.folds]
        assert max(per_fold) - min(per_fold) <= 1
    for train, test in plan.splits():
        assert set(train.tolist()).isdisjoint(test.tolist())
        assert train.size + test.size == labels.size


def test_five_folds_of_ninety_hold_six_per_class() -> None:
    labels = np.repeat([0, 1, 2], 30)
    plan = stratified_kfold(labels, 5, seed=8)
    for fold in plan.folds:
        assert len(fold) == 18
        assert np.bincount(labels[list(fold)], minlength=3).tolist() == [6, 6, 6]


def test_kfold_rejects_bad_inputs() -> None:
    with pytest.raises(InvalidConfig):
        stratified_kfold([0, 1] * 5, 1, 0)
    with pytest.raises(TooFewSamples):
        stratified_kfold([0] * 10 + [1] * 3, 5, 0)


def test_plans_survive_save_and_load(tmp_path: Path) -> None:
    labels = np.repeat([0, 1], 15)
    split = stratified_split(labels, 0.8, 4)
    folds = stratified_kfold(labels, 5, 4)
    assert load_plan(save_plan(split, tmp_path / "split.json")) == split
    assert load_plan(save_plan(folds, tmp_path / "folds.json")) == folds


# --- feature selection


def test_selection_recovers_planted_features() -> None:
    hits = 0
    for seed in range(10):
        X, y = _planted(seed)
        subset = select_best_features(X, y, make_trainer("nb"), stratified_kfold(y, 5, seed), 3, seed)
        assert subset.evaluated == 120
        hits += subset.indices == (1, 2, 10)
    assert hits >= 8


def test_selection_on_pure_noise_stays_near_chance() -> None:
    rng = np.random.default_rng(71)
    X = rng.normal(size=(200, 10))
    y = np.repeat([0, 1], 100)
    subset = select_best_features(X, y, make_trainer("nb"), stratified_kfold(y, 5, 1), 3, 1)
    assert 0.3 <= subset.cv_loss <= 0.65


def test_selection_ties_keep_smallest_index() -> None:
    rng = np.random.default_rng(72)
    y = np.repeat([0, 1], 30)
    X = rng.normal(size=(60, 6))
    X[:, 1] = y * 5.0 + rng.uniform(size=60)
    X[:, 4] = X[:, 1]
    subset = select_best_features(X, y, make_trainer("nb"), stratified_kfold(y, 5, 0), 1, 0)
    assert subset.indices == (2,)
    assert subset.cv_loss == 0.0


# --- tuning


def test_tuning_trace_is_a_running_minimum() -> None:
    rng = np.random.default_rng(73)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] + 0.3 * rng.normal(size=40) > 0).astype(int)
    result = tune_hyperparameters(X, y, budget=8, seed=2)
    assert len(result.trace) == 8
    losses = [step.loss for step in result.trace]
    best = [step.best_so_far for step in result.trace]
    assert best == list(np.minimum.accumulate(losses))
    assert result.loss == min(losses)
    for step in result.trace:
        assert 10 ** LOG10_C_RANGE[0] <= step.C <= 10 ** LOG10_C_RANGE[1]
        assert 10 ** LOG10_GAMMA_RANGE[0] <= step.gamma <= 10 ** LOG10_GAMMA_RANGE[1]
    again = tune_hyperparameters(X, y, budget=8, seed=2)
    assert again.trace == result.trace


def test_tuning_budget_must_be_positive() -> None:
    with pytest.raises(InvalidConfig):
        tune_hyperparameters(np.zeros((10, 2)), np.repeat([0, 1], 5), budget=0)


# --- ModelSpec fitting


def test_fit_spec_selects_columns_on_separable_data(separable_matrix: FeatureMatrix) -> None:
    spec = ModelSpec(family="nb", select_features=True)
    fitted = fit_spec(spec, separable_matrix, seed=1)
    assert fitted.feature_indices == (1, 2, 3)
    assert fitted.choice.subset is not None and fitted.choice.subset.cv_loss == 0.0
    chosen = separable_matrix.select(fitted.feature_indices)
    assert np.array_equal(fitted.model.predict(chosen.values), separable_matrix.labels)


def test_cross_validation_reports_one_result_per_fold(separable_matrix: FeatureMatrix) -> None:
    plan = stratified_kfold(separable_matrix.labels, 5, 0)
    reports = cross_validate(ModelSpec(family="dt", params=ClassifierParams()), separable_matrix, plan, seed=0)
    assert len(reports) == 5
    assert sum(r.confusion.total for r in reports) == separable_matrix.n_rows
    assert all(r.accuracy == 1.0 for r in reports)
