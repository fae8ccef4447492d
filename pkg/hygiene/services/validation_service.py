from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from ..domain import DURATION_TOLERANCE_S, EventRecording
from ..domain_schemas import ExperimentLogEntry

logger = logging.getLogger(__name__)


@dataclass
class ValidationIssue:
    severity: str
    code: str
    location: str
    message: str


@dataclass
class LogMatch:
    event_id: str
    logged_duration_s: float
    recorded_duration_s: Optional[float]
    status: str  # matched | missing | mismatched


@dataclass
class ValidationReport:
    ok: bool
    matched: int
    missing: int
    mismatched: int
    entries: List[LogMatch] = field(default_factory=list)
    issues: List[ValidationIssue] = field(default_factory=list)

    @property
    def n_entries(self) -> int:
        return len(self.entries)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "matched": self.matched,
            "missing": self.missing,
            "mismatched": self.mismatched,
            "entries": [vars(e) for e in self.entries],
            "issues": [vars(i) for i in self.issues],
        }


class ValidationService:
    """Compares what the device captured against what the experiment log says happened."""

    def __init__(self, tolerance_s: float = DURATION_TOLERANCE_S) -> None:
        self.tolerance_s = tolerance_s

    def validate(
        self,
        recordings: Sequence[EventRecording],
        log: Sequence[ExperimentLogEntry],
    ) -> ValidationReport:
        issues: List[ValidationIssue] = []
        by_id: Dict[str, EventRecording] = {}
        for rec in recordings:
            by_id.setdefault(rec.event_id, rec)

        self._check_duplicates(log, issues)

        entries: List[LogMatch] = []
        for idx, entry in enumerate(log):
            rec = by_id.get(entry.event_id)
            if rec is None:
                entries.append(LogMatch(entry.event_id, entry.duration_s, None, "missing"))
                issues.append(
                    ValidationIssue("ERROR", "MISSING_RECORDING", f"log[{idx}]", f"No recording for event {entry.event_id}")
                )
                continue

            recorded = rec.duration_seconds
            if abs(recorded - entry.duration_s) > self.tolerance_s:
                entries.append(LogMatch(entry.event_id, entry.duration_s, recorded, "mismatched"))
                issues.append(
                    ValidationIssue(
                        "WARN",
                        "DURATION_MISMATCH",
                        f"log[{idx}]",
                        f"Event {entry.event_id}: recorded {recorded:.2f}s vs logged {entry.duration_s:.2f}s",
                    )
                )
            else:
                entries.append(LogMatch(entry.event_id, entry.duration_s, recorded, "matched"))

        logged_ids = {entry.event_id for entry in log}
        for rec in recordings:
            if rec.event_id not in logged_ids:
                issues.append(
                    ValidationIssue("WARN", "UNLOGGED_RECORDING", f"recordings:{rec.event_id}", "Recording has no log entry")
                )

        counts = Counter(e.status for e in entries)
        report = ValidationReport(
            ok=not any(issue.severity == "ERROR" for issue in issues),
            matched=counts["matched"],
            missing=counts["missing"],
            mismatched=counts["mismatched"],
            entries=entries,
            issues=issues,
        )
        logger.info(
            "Validated against log: entries=%d matched=%d missing=%d mismatched=%d",
            report.n_entries,
            report.matched,
            report.missing,
            report.mismatched,
        )
        return report

    def _check_duplicates(self, log: Sequence[ExperimentLogEntry], issues: List[ValidationIssue]) -> None:
        seen: Dict[str, int] = {}
        for idx, entry in enumerate(log):
            if entry.event_id in seen:
                issues.append(
                    ValidationIssue(
                        "ERROR",
                        "DUPLICATE_ID",
                        f"log[{idx}]",
                        f"Duplicate event id {entry.event_id} (first at log[{seen[entry.event_id]}])",
                    )
                )
            else:
                seen[entry.event_id] = idx


def validate_against_log(
    recordings: Sequence[EventRecording],
    log: Sequence[ExperimentLogEntry],
) -> ValidationReport:
    return ValidationService().validate(recordings, log)
