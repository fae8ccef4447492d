from __future__ import annotations

import numpy as np
import pytest

from hygiene.errors import InvalidLabel, LengthMismatch
from hygiene.services.metrics_service import (
    aggregate_folds,
    confusion,
    evaluate_predictions,
    format_mean_std,
    format_percent,
    macro_metrics,
    pool_confusions,
)


def test_confusion_counts_true_by_predicted() -> None:
    cm = confusion([0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 2, 0])
    assert cm.counts.tolist() == [[1, 1, 0], [0, 2, 0], [1, 0, 1]]
    assert cm.total == 6
    assert cm.misclassified == 2


def test_macro_metrics_worked_example() -> None:
    metrics = macro_metrics(confusion([0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 2, 0]))
    assert metrics["accuracy"] == pytest.approx(4 / 6)
    assert metrics["recall_macro"] == pytest.approx((0.5 + 1.0 + 0.5) / 3)
    assert metrics["precision_macro"] == pytest.approx((0.5 + 2 / 3 + 1.0) / 3)


def test_macro_metrics_skip_absent_classes() -> None:
    metrics = macro_metrics(confusion([0, 1], [0, 0], classes=(0, 1, 2)))
    assert metrics["recall_macro"] == pytest.approx(0.5)
    assert metrics["precision_macro"] == pytest.approx(0.25)


def test_macro_metrics_ignore_a_class_absent_from_both_sides() -> None:
    # two-class labels on the default three-code layout
    cm = confusion([0, 0, 1, 1], [0, 0, 1, 1])
    assert cm.counts.shape == (3, 3)
    metrics = macro_metrics(cm)
    assert metrics["recall_macro"] == 1.0
    assert metrics["precision_macro"] == 1.0


def test_accuracy_is_fraction_of_agreement() -> None:
    rng = np.random.default_rng(61)
    for _ in range(20):
        t = rng.integers(0, 3, size=50)
        p = rng.integers(0, 3, size=50)
        report = evaluate_predictions(t, p)
        assert report.accuracy == pytest.approx(np.mean(t == p))
        assert report.confusion.total == 50
        assert 0.0 <= report.recall_macro <= 1.0 and 0.0 <= report.precision_macro <= 1.0


def test_confusion_rejects_bad_input() -> None:
    with pytest.raises(LengthMismatch):
        confusion([0, 1], [0])
    with pytest.raises(InvalidLabel):
        confusion([0, 3], [0, 0])


def test_aggregate_uses_population_std() -> None:
    reports = [evaluate_predictions([0, 1], [0, 1]), evaluate_predictions([0, 1], [0, 0])]
    summary = aggregate_folds(reports)
    assert summary["accuracy"].mean == pytest.approx(0.75)
    assert summary["accuracy"].std == pytest.approx(0.25)


def test_pooling_sums_counts() -> None:
    a = confusion([0, 1, 2], [0, 1, 1])
    b = confusion([2, 2, 0], [2, 2, 1])
    pooled = pool_confusions([a, b])
    assert pooled.counts.tolist() == (a.counts + b.counts).tolist()
    with pytest.raises(LengthMismatch):
        pool_confusions([a, confusion([0, 1], [0, 1], classes=(0, 1))])


def test_number_formats() -> None:
    assert format_mean_std(1.0, 0.0) == "1.0 ± 0.00"
    assert format_mean_std(0.9, 0.05) == "0.9 ± 0.05"
    assert format_mean_std(0.95, 0.0123) == "0.95 ± 0.01"
    assert format_percent(11 / 12) == "91.67%"


@pytest.mark.parametrize(("errors", "rendered"), [(6, "95.00%"), (8, "93.33%"), (1, "99.17%")])
def test_pooled_trial_error_counts_render_exactly(errors: int, rendered: str) -> None:
    y_true = np.repeat([0, 1], 60)
    y_pred = y_true.copy()
    y_pred[:errors] = 1
    cm = confusion(y_true, y_pred, (0, 1))
    assert cm.total == 120
    assert format_percent(macro_metrics(cm)["accuracy"]) == rendered
