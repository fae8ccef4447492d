from __future__ import annotations

from hygiene.services.validation_service import ValidationService, validate_against_log

from .conftest import log_entry, recording


def test_matching_durations_pass() -> None:
    report = validate_against_log([recording("KS-000", 1234)], [log_entry("KS-000", 12.0)])
    assert report.ok
    assert report.matched == 1
    assert report.issues == []


def test_duration_mismatch_is_a_warning() -> None:
    report = validate_against_log([recording("KS-000", 500)], [log_entry("KS-000", 12.0)])
    assert report.ok
    assert report.mismatched == 1
    assert [i.code for i in report.issues] == ["DURATION_MISMATCH"]
    assert report.entries[0].recorded_duration_s == 5.0


def test_missing_recording_fails() -> None:
    report = validate_against_log([], [log_entry("TF-003", 50.0, location="Toilet Flushing")])
    assert not report.ok
    assert report.missing == 1
    assert report.issues[0].code == "MISSING_RECORDING"
    assert report.issues[0].location == "log[0]"


def test_duplicate_log_ids_fail() -> None:
    log = [log_entry("BF-001", 3.0), log_entry("BF-001", 3.0)]
    report = validate_against_log([recording("BF-001", 300)], log)
    assert not report.ok
    assert "DUPLICATE_ID" in [i.code for i in report.issues]


def test_unlogged_recording_is_reported() -> None:
    report = validate_against_log([recording("KS-000", 300), recording("KS-999", 300)], [log_entry("KS-000", 3.0)])
    assert report.ok
    assert [i.code for i in report.issues] == ["UNLOGGED_RECORDING"]


def test_tolerance_is_configurable() -> None:
    strict = ValidationService(tolerance_s=0.1).validate([recording("KS-000", 350)], [log_entry("KS-000", 3.0)])
    assert strict.mismatched == 1
    assert strict.as_dict()["entries"][0]["status"] == "mismatched"


def test_empty_log_and_no_recordings() -> None:
    report = validate_against_log([], [])
    assert report.ok
    assert report.n_entries == 0
    assert (report.matched, report.missing, report.mismatched) == (0, 0, 0)
    assert report.issues == []


def test_fifty_second_event_matches_5000_samples() -> None:
    report = validate_against_log([recording("TF-000", 5000)], [log_entry("TF-000", 50.0, location="Toilet Flushing")])
    assert report.matched == 1
    assert report.mismatched == 0


def test_full_campaign_with_eight_lost_recordings() -> None:
    log = [log_entry(f"KS-{i:03d}", 2.0) for i in range(368)]
    lost = {5, 17, 40, 99, 150, 222, 301, 367}
    recordings = [recording(f"KS-{i:03d}", 200, seed=i) for i in range(368) if i not in lost]
    assert len(recordings) == 360
    report = validate_against_log(recordings, log)
    assert not report.ok
    assert (report.matched, report.missing, report.mismatched) == (360, 8, 0)
    assert sorted(e.event_id for e in report.entries if e.status == "missing") == [f"KS-{i:03d}" for i in sorted(lost)]
