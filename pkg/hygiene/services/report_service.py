"""Report files: JSON documents, Jinja2 text tables and CSV data tables.

Nothing here writes timestamps, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd
from jinja2 import BaseLoader, Environment, StrictUndefined

from ..config import PipelineConfig
from ..domain import FEATURE_NAMES, HygieneClass
from ..schemas import ValidationResponse
from .metrics_service import ConfusionMatrix, EvaluationReport, format_mean_std, format_percent
from .trial_service import CompareReport, TrialReport
from .validation_service import ValidationReport

VALIDATION_TEMPLATE = """Validation against experiment log
=================================

entries={{ report.n_entries }} matched={{ report.matched }} missing={{ report.missing }} mismatched={{ report.mismatched }} ok={{ "yes" if report.ok else "no" }}

{% if issues %}
{{ table(["Severity", "Code", "Location", "Message"], issues) }}
{% else %}
No issues found.
{% endif %}

Configuration
-------------
{{ config_lines }}"""

EVALUATION_TEMPLATE = """Evaluation: {{ title }}
{{ "=" * (title | length + 12) }}

Confusion matrix (rows: true class, columns: predicted)

{{ confusion_table(confusion) }}

{{ table(["Metric", "Value"], metrics) }}

Configuration
-------------
{{ config_lines }}"""

COMPARE_TEMPLATE = """Classifier comparison ({{ k }}-fold cross-validation)
=============================================

{{ table(["Model", "Accuracy", "Recall", "Precision"], rows) }}

Configuration
-------------
{{ config_lines }}"""

TRIAL_TEMPLATE = """{{ attempts | length }}-run trial: {{ title }}
==================================

{{ table(["Attempt", "Features", "Accuracy", "Input", "Misclassification"], attempts) }}

Overall accuracy: {{ overall }}
{% if tuned %}

{{ table(["Attempt", "C", "gamma", "Best CV loss"], tuned) }}
{% endif %}

Pooled confusion matrix ({{ pooled.total }} test events)

{{ confusion_table(pooled) }}

Configuration
-------------
{{ config_lines }}"""

FEATURE_SUMMARY_TEMPLATE = """Per-class feature summary (mean ± population std)
=================================================

{{ table(headers, rows) }}

Configuration
-------------
{{ config_lines }}"""


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Left-aligned text table with a dashed rule under the header."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_confusion(cm: ConfusionMatrix) -> str:
    names = [HygieneClass(c).short for c in cm.classes]
    rows = [[names[i], *cm.counts[i].tolist()] for i in range(len(names))]
    return format_table(["true \\ pred", *names], rows)


def _environment() -> Environment:
    env = Environment(
        loader=BaseLoader(),
        autoescape=False,
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.globals["table"] = format_table
    env.globals["confusion_table"] = format_confusion
    return env


def render(template_text: str, **context: Any) -> str:
    return _environment().from_string(template_text).render(**context).rstrip() + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_json(path: Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def config_document(config: PipelineConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")


def _features_label(indices: Sequence[int]) -> str:
    return "[" + ", ".join(str(i) for i in indices) + "]"


# --- validation

def validation_document(report: ValidationReport, config: PipelineConfig) -> Dict[str, Any]:
    body = ValidationResponse.model_validate(report.as_dict()).model_dump(mode="json")
    return {"config": config_document(config), "validation": body}


def render_validation(report: ValidationReport, config: PipelineConfig) -> str:
    issues = [[i.severity, i.code, i.location, i.message] for i in report.issues]
    return render(VALIDATION_TEMPLATE, report=report, issues=issues, config_lines=config.as_lines())


# --- evaluation

def _metric_rows(report: EvaluationReport) -> List[List[str]]:
    return [
        ["Accuracy", format_percent(report.accuracy)],
        ["Recall (macro)", format_percent(report.recall_macro)],
        ["Precision (macro)", format_percent(report.precision_macro)],
        ["Misclassified", f"{report.misclassified} of {report.confusion.total}"],
    ]


def evaluation_document(report: EvaluationReport, config: PipelineConfig, **extra: Any) -> Dict[str, Any]:
    return {"config": config_document(config), **extra, "evaluation": report.as_dict()}


def render_evaluation(report: EvaluationReport, config: PipelineConfig, title: str) -> str:
    return render(
        EVALUATION_TEMPLATE,
        title=title,
        confusion=report.confusion,
        metrics=_metric_rows(report),
        config_lines=config.as_lines(),
    )


# --- compare

def compare_document(report: CompareReport, config: PipelineConfig) -> Dict[str, Any]:
    return {"config": config_document(config), **report.as_dict()}


def render_compare(report: CompareReport, config: PipelineConfig) -> str:
    rows = []
    for result in report.results:
        summary = result.summary
        rows.append([result.label, *(str(summary[name]) for name in ("accuracy", "recall_macro", "precision_macro"))])
    return render(COMPARE_TEMPLATE, k=report.fold_plan.k, rows=rows, config_lines=config.as_lines())


def compare_frame(report: CompareReport) -> pd.DataFrame:
    rows = []
    for result in report.results:
        row: Dict[str, Any] = {"model": result.label}
        for name, ms in result.summary.items():
            row[f"{name}_mean"] = ms.mean
            row[f"{name}_std"] = ms.std
            row[name] = format_mean_std(ms.mean, ms.std)
        rows.append(row)
    return pd.DataFrame(rows)


# --- trial

def _input_label(counts: Dict[int, int]) -> str:
    return " / ".join(f"{counts[c]} {HygieneClass(c).title}" for c in sorted(counts))


def trial_document(report: TrialReport, config: PipelineConfig) -> Dict[str, Any]:
    return {"config": config_document(config), **report.as_dict()}


def render_trial(report: TrialReport, config: PipelineConfig) -> str:
    title = " vs ".join(HygieneClass(c).title for c in report.classes)
    attempts = [
        [a.attempt, _features_label(a.features), format_percent(a.accuracy), _input_label(a.test_counts), a.misclassified]
        for a in report.attempts
    ]
    tuned = [
        [a.attempt, f"{a.C:.4g}", f"{a.gamma:.4g}", f"{a.trace[-1].best_so_far:.4f}"]
        for a in report.attempts
        if a.C is not None and a.trace
    ]
    return render(
        TRIAL_TEMPLATE,
        title=title,
        attempts=attempts,
        overall=format_percent(report.overall_accuracy),
        tuned=tuned,
        pooled=report.pooled,
        config_lines=config.as_lines(),
    )


def trial_frame(report: TrialReport) -> pd.DataFrame:
    """Attempt, Features, Accuracy, Input, Misclassification: one row per attempt."""
    return pd.DataFrame(
        [
            {
                "Attempt": a.attempt,
                "Features": _features_label(a.features),
                "Accuracy": format_percent(a.accuracy),
                "Input": _input_label(a.test_counts),
                "Misclassification": a.misclassified,
            }
            for a in report.attempts
        ]
    )


def trace_frame(report: TrialReport) -> pd.DataFrame:
    """Observed and best-so-far CV loss per tuning iteration, per attempt."""
    rows = [
        {
            "attempt": a.attempt,
            "iteration": step.iteration,
            "C": step.C,
            "gamma": step.gamma,
            "loss": step.loss,
            "best_so_far": step.best_so_far,
        }
        for a in report.attempts
        for step in a.trace
    ]
    return pd.DataFrame(rows, columns=["attempt", "iteration", "C", "gamma", "loss", "best_so_far"])


# --- features

def render_feature_summary(summary: Dict[int, Dict[str, Any]], config: PipelineConfig) -> str:
    codes = sorted(summary)
    headers = ["Feature", *(HygieneClass(c).title for c in codes)]
    rows = []
    for name in FEATURE_NAMES:
        row = [name]
        for code in codes:
            mean, std = summary[code][name]
            row.append(f"{mean:.4g} ± {std:.4g}")
        rows.append(row)
    return render(FEATURE_SUMMARY_TEMPLATE, headers=headers, rows=rows, config_lines=config.as_lines())
