from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from scipy import signal

from hygiene.domain import BandSpec, EventRecording, HygieneClass
from hygiene.errors import (
    EmptyRecording,
    FileMissing,
    InvalidBand,
    MalformedRow,
    NonFiniteSample,
    OutOfRange,
    UnsupportedRate,
)
from hygiene.services.signal_service import (
    bandpass_filter,
    design_bandpass,
    load_experiment_log,
    load_logged_recordings,
    load_recording,
    segment,
    write_experiment_log,
    write_recording,
)

from .conftest import log_entry

FS = 100.0


def _write(path: Path, body: str) -> Path:
    path.write_text(body, encoding="utf-8")
    return path


def _sine(freq_hz: float, n: int) -> EventRecording:
    t = np.arange(n) / FS
    return EventRecording("sine", np.sin(2.0 * math.pi * freq_hz * t))


def _steady_amplitude(rec: EventRecording, band: BandSpec, tail: int) -> float:
    # tail spans a whole number of half-periods, so mean(y^2) = A^2 / 2 exactly
    y = bandpass_filter(rec, band).samples[-tail:]
    return math.sqrt(2.0 * float(np.mean(y * y)))


def test_load_recording_parses_rows_in_order(tmp_path: Path) -> None:
    path = _write(tmp_path / "KS-001.csv", "timestamp_ms,counts\n0,0.0\n10,1.5\n20,-1.5\n")
    rec = load_recording(path)
    assert rec.event_id == "KS-001"
    assert rec.samples.tolist() == [0.0, 1.5, -1.5]
    assert rec.sample_rate_hz == FS


def test_load_recording_empty_data_section(tmp_path: Path) -> None:
    path = _write(tmp_path / "empty.csv", "timestamp_ms,counts\n")
    with pytest.raises(EmptyRecording):
        load_recording(path)


def test_load_recording_missing_file(tmp_path: Path) -> None:
    with pytest.raises(FileMissing):
        load_recording(tmp_path / "nope.csv")


def test_load_recording_reports_malformed_row(tmp_path: Path) -> None:
    path = _write(tmp_path / "bad.csv", "timestamp_ms,counts\n0,1.0\n10,abc\n20,2.0\n")
    with pytest.raises(MalformedRow) as info:
        load_recording(path)
    assert info.value.row == 3
    assert "bad.csv:3" in str(info.value)


def test_load_recording_rejects_non_finite(tmp_path: Path) -> None:
    path = _write(tmp_path / "nan.csv", "timestamp_ms,counts\n0,1.0\n10,nan\n")
    with pytest.raises(NonFiniteSample) as info:
        load_recording(path)
    assert info.value.row == 3


def test_load_recording_rejects_wrong_header(tmp_path: Path) -> None:
    path = _write(tmp_path / "hdr.csv", "time,value\n0,1.0\n")
    with pytest.raises(MalformedRow):
        load_recording(path)


def test_load_recording_rate_override(tmp_path: Path) -> None:
    path = _write(tmp_path / "slow.csv", "timestamp_ms,counts\n0,1.0\n20,2.0\n40,3.0\n")
    with pytest.raises(UnsupportedRate):
        load_recording(path)
    rec = load_recording(path, allow_rate_override=True)
    assert rec.sample_rate_hz == pytest.approx(50.0)


def test_load_recording_rejects_timestamp_gap(tmp_path: Path) -> None:
    # median step is 10 ms, so the rate check alone would accept this file
    path = _write(tmp_path / "gap.csv", "timestamp_ms,counts\n0,0\n10,1\n20,2\n500,3\n510,4\n")
    with pytest.raises(MalformedRow) as info:
        load_recording(path)
    assert info.value.row == 5
    assert "gap.csv:5" in str(info.value)


def test_load_recording_override_tolerates_whole_ms_rounding(tmp_path: Path) -> None:
    rec = EventRecording("thirty", np.arange(7, dtype=float), sample_rate_hz=30.0)
    path = write_recording(rec, tmp_path / "thirty.csv")
    loaded = load_recording(path, allow_rate_override=True)
    assert np.array_equal(loaded.samples, rec.samples)


def test_write_then_load_is_bit_exact(tmp_path: Path) -> None:
    rng = np.random.default_rng(3)
    for i in range(100):
        n = int(rng.integers(1, 200))
        samples = rng.standard_normal(n) * 10.0 ** rng.uniform(-6, 6)
        rec = EventRecording(f"rec-{i:03d}", samples)
        loaded = load_recording(write_recording(rec, tmp_path / f"{rec.event_id}.csv"))
        assert np.array_equal(loaded.samples, rec.samples)


def test_filter_zero_input_gives_zero_output() -> None:
    out = bandpass_filter(EventRecording("z", np.zeros(1000)), BandSpec())
    assert out.n_samples == 1000
    assert np.all(out.samples == 0.0)


def test_filter_passes_in_band_sines() -> None:
    band = BandSpec()
    for freq in (20.0, 23.0):
        amplitude = _steady_amplitude(_sine(freq, 10_000), band, tail=5000)
        assert 20.0 * math.log10(amplitude) > -3.0


def test_filter_attenuates_below_low_cutoff() -> None:
    amplitude = _steady_amplitude(_sine(0.1, 30_000), BandSpec(), tail=5000)
    assert amplitude <= 0.1


def test_default_band_attenuates_near_nyquist() -> None:
    assert _steady_amplitude(_sine(49.0, 20_000), BandSpec(), tail=4900) <= 0.1


def test_default_band_frequency_response() -> None:
    _, h = signal.sosfreqz(design_bandpass(BandSpec(), FS), worN=[0.1, 10.0, 20.0, 49.0], fs=FS)
    gain_db = 20.0 * np.log10(np.abs(h))
    assert gain_db[0] <= -20.0
    assert gain_db[1] > -3.0 and gain_db[2] > -3.0
    assert gain_db[3] <= -20.0


def test_single_section_falls_short_near_nyquist() -> None:
    _, h = signal.sosfreqz(design_bandpass(BandSpec(order=1), FS), worN=[49.0], fs=FS)
    assert -20.0 < 20.0 * math.log10(abs(h[0])) < -10.0


def test_filter_rejects_dc() -> None:
    out = bandpass_filter(EventRecording("dc", np.ones(3000)), BandSpec())
    assert np.max(np.abs(out.samples[-500:])) <= 0.1


def test_filter_is_linear() -> None:
    rng = np.random.default_rng(5)
    band = BandSpec()
    for _ in range(10):
        x = rng.standard_normal(500)
        y = rng.standard_normal(500)
        a, b = rng.uniform(-5, 5, size=2)
        combined = bandpass_filter(EventRecording("xy", a * x + b * y), band).samples
        separate = a * bandpass_filter(EventRecording("x", x), band).samples + b * bandpass_filter(
            EventRecording("y", y), band
        ).samples
        scale = np.max(np.abs(separate))
        assert np.allclose(combined, separate, rtol=1e-9, atol=1e-9 * scale)


@pytest.mark.parametrize("low,high", [(0.0, 45.0), (10.0, 5.0), (1.0, 50.0)])
def test_filter_rejects_invalid_band(low: float, high: float) -> None:
    with pytest.raises(InvalidBand):
        bandpass_filter(EventRecording("r", np.ones(10)), BandSpec(low, high))


def test_segment_index_arithmetic() -> None:
    samples = np.arange(1000, dtype=np.float64)
    rec = EventRecording("ten-seconds", samples)
    part = segment(rec, 2.0, 1.0)
    assert np.array_equal(part.samples, samples[200:300])


def test_segment_full_range_is_identity() -> None:
    rec = EventRecording("r", np.random.default_rng(1).standard_normal(750))
    same = segment(rec, 0.0, rec.duration_seconds)
    assert np.array_equal(same.samples, rec.samples)


def test_segment_is_idempotent() -> None:
    rec = EventRecording("r", np.random.default_rng(2).standard_normal(1000))
    once = segment(rec, 1.37, 2.29)
    twice = segment(once, 0.0, 2.29)
    assert np.array_equal(once.samples, twice.samples)


def test_segment_is_idempotent_off_the_sample_grid() -> None:
    rec = EventRecording("r", np.arange(100, dtype=np.float64))
    once = segment(rec, 0.015, 0.017)
    assert once.samples.tolist() == [1.0, 2.0]
    twice = segment(once, 0.0, 0.017)
    assert np.array_equal(twice.samples, once.samples)
    assert twice.origin_s == pytest.approx(0.015)


def test_segment_of_segment_uses_source_indices() -> None:
    samples = np.arange(1000, dtype=np.float64)
    inner = segment(EventRecording("r", samples), 1.005, 3.0)
    assert np.array_equal(segment(inner, 0.5, 1.0).samples, samples[150:250])


def test_filter_keeps_segment_origin() -> None:
    part = segment(EventRecording("r", np.random.default_rng(5).standard_normal(1000)), 2.5, 5.0)
    assert bandpass_filter(part, BandSpec()).origin_s == pytest.approx(2.5)


def test_segment_out_of_range() -> None:
    rec = EventRecording("r", np.ones(100))
    with pytest.raises(OutOfRange):
        segment(rec, 0.5, 1.0)
    with pytest.raises(OutOfRange):
        segment(rec, -0.1, 0.5)


def test_experiment_log_round_trip(tmp_path: Path) -> None:
    entries = [log_entry("KS-000", 12.34), log_entry("TF-001", 55.0, location="Toilet Flushing")]
    loaded = load_experiment_log(write_experiment_log(entries, tmp_path / "experiment_log.csv"))
    assert loaded == entries


def test_experiment_log_reports_bad_row(tmp_path: Path) -> None:
    header = "date,start_time,duration_s,building_type,location,position,event_type,sensor_distance_m,event_id\n"
    good = "2021-06-14,09:30:00,12.5,House,Kitchen Sink,Counter,Water flow,1.5,KS-000\n"
    bad = "2021-06-14,09:40:00,-3,House,Kitchen Sink,Counter,Water flow,1.5,KS-001\n"
    path = _write(tmp_path / "experiment_log.csv", header + good + bad)
    with pytest.raises(MalformedRow) as info:
        load_experiment_log(path)
    assert info.value.row == 3


def test_load_logged_recordings_labels_and_skips_missing(tmp_path: Path) -> None:
    rec = EventRecording("BF-000", np.random.default_rng(4).standard_normal(300))
    write_recording(rec, tmp_path / "samples" / "BF-000.csv")
    entries = [log_entry("BF-000", 3.0, location="Bathroom Faucet"), log_entry("BF-001", 3.0, location="Bathroom Faucet")]
    loaded = load_logged_recordings(tmp_path, entries)
    assert [r.event_id for r in loaded] == ["BF-000"]
    assert loaded[0].label is HygieneClass.BATHROOM_FAUCET
