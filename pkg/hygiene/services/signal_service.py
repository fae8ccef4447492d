"""Signal core: samples/log file IO, segmentation and band-pass filtering."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import signal

from ..domain import DEFAULT_SAMPLE_RATE_HZ, BandSpec, EventRecording, HygieneClass
from ..domain_schemas import LOG_COLUMNS, ExperimentLogEntry
from ..errors import (
    EmptyRecording,
    FileMissing,
    MalformedRow,
    NonFiniteOutput,
    NonFiniteSample,
    OutOfRange,
    UnsupportedRate,
)

logger = logging.getLogger(__name__)

SAMPLES_HEADER = ("timestamp_ms", "counts")
NON_FINITE_TOKENS = {"nan", "+nan", "-nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}
RATE_TOLERANCE = 1e-6
# absorbs representation error in start/duration products such as 0.29 * 100
INDEX_EPS = 1e-9


def load_recording(
    path: Path,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    allow_rate_override: bool = False,
    label: Optional[HygieneClass] = None,
    meta: Optional[ExperimentLogEntry] = None,
) -> EventRecording:
    """Parse a ``timestamp_ms,counts`` samples file; event_id is the file stem."""
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"Samples file not found: {path}", location=str(path))

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise MalformedRow("File has no header line", location=f"{path}:1", row=1) from exc
    except pd.errors.ParserError as exc:
        raise MalformedRow(str(exc), location=f"{path}:1", row=1) from exc

    if tuple(c.strip() for c in frame.columns) != SAMPLES_HEADER:
        raise MalformedRow(
            f"Expected header {','.join(SAMPLES_HEADER)}, got {','.join(map(str, frame.columns))}",
            location=f"{path}:1",
            row=1,
        )
    if frame.empty:
        raise EmptyRecording("Samples file has an empty data section", location=str(path))

    stamps = pd.to_numeric(frame["timestamp_ms"].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    counts_raw = frame["counts"].str.strip()
    counts = pd.to_numeric(counts_raw, errors="coerce").to_numpy(dtype=np.float64)

    for name, column in (("timestamp_ms", stamps), ("counts", counts)):
        bad = np.isnan(column)
        if name == "counts":
            bad &= ~counts_raw.str.lower().isin(NON_FINITE_TOKENS).to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise MalformedRow(f"Unparseable {name} value", location=f"{path}:{row + 2}", row=row + 2)

    not_finite = ~np.isfinite(counts)
    if not_finite.any():
        row = int(np.flatnonzero(not_finite)[0])
        raise NonFiniteSample("Sample value is not finite", location=f"{path}:{row + 2}", row=row + 2)
    if not np.all(np.isfinite(stamps)):
        row = int(np.flatnonzero(~np.isfinite(stamps))[0])
        raise MalformedRow("Timestamp is not finite", location=f"{path}:{row + 2}", row=row + 2)

    steps = np.diff(stamps)
    if steps.size and np.any(steps <= 0):
        row = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise MalformedRow("Timestamps must increase monotonically", location=f"{path}:{row + 2}", row=row + 2)

    rate = sample_rate_hz
    if steps.size:
        declared = 1000.0 / float(np.median(steps))
        if abs(declared - sample_rate_hz) > RATE_TOLERANCE * sample_rate_hz:
            if not allow_rate_override:
                raise UnsupportedRate(
                    f"File declares {declared:.6g} Hz, expected {sample_rate_hz:g} Hz",
                    location=str(path),
                )
            logger.warning("Rate override: file=%s declared_hz=%.6g expected_hz=%g", path, declared, sample_rate_hz)
            rate = declared

        step_ms = 1000.0 / rate
        # whole-millisecond stamps cannot hold a fractional overridden step exactly
        slack = RATE_TOLERANCE * step_ms if rate == sample_rate_hz else 1.0 + RATE_TOLERANCE * step_ms
        uneven = np.abs(steps - step_ms) > slack
        if uneven.any():
            row = int(np.flatnonzero(uneven)[0]) + 1
            raise MalformedRow(
                f"Timestamps must be evenly spaced at {step_ms:.6g} ms, got a step of {steps[row - 1]:.6g} ms",
                location=f"{path}:{row + 2}",
                row=row + 2,
            )

    return EventRecording(event_id=path.stem, samples=counts, sample_rate_hz=rate, label=label, meta=meta)


def write_recording(rec: EventRecording, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamps = np.round(np.arange(rec.n_samples) * (1000.0 / rec.sample_rate_hz)).astype(np.int64)
    frame = pd.DataFrame({SAMPLES_HEADER[0]: stamps, SAMPLES_HEADER[1]: rec.samples})
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def bandpass_filter(rec: EventRecording, band: BandSpec) -> EventRecording:
    """Causal Butterworth band-pass (``band.order`` biquad sections, zero initial state)."""
    band.validate(rec.sample_rate_hz)
    sos = design_bandpass(band, rec.sample_rate_hz)
    filtered = signal.sosfilt(sos, rec.samples)
    if not np.all(np.isfinite(filtered)):
        raise NonFiniteOutput("Band-pass output is not finite", location=rec.event_id)
    return EventRecording(
        event_id=rec.event_id,
        samples=filtered,
        sample_rate_hz=rec.sample_rate_hz,
        label=rec.label,
        meta=rec.meta,
        origin_s=rec.origin_s,
    )


def design_bandpass(band: BandSpec, sample_rate_hz: float) -> np.ndarray:
    band.validate(sample_rate_hz)
    return signal.butter(band.order, [band.low_hz, band.high_hz], btype="bandpass", fs=sample_rate_hz, output="sos")


def segment(rec: EventRecording, start_s: float, duration_s: float) -> EventRecording:
    """Slice ``[floor(t0*fs), floor((t0+duration)*fs))`` of the source recording, with ``t0 = origin + start``.

    Indices are taken on the source recording's sample grid, so re-segmenting a
    segment from 0 with the same duration selects the same samples.
    """
    fs = rec.sample_rate_hz
    if start_s < 0 or duration_s <= 0 or not math.isfinite(start_s + duration_s):
        raise OutOfRange(f"Invalid segment start={start_s} duration={duration_s}", location=rec.event_id)
    first = int(math.floor(rec.origin_s * fs + INDEX_EPS))
    t0 = rec.origin_s + start_s
    lo = int(math.floor(t0 * fs + INDEX_EPS)) - first
    hi = int(math.floor((t0 + duration_s) * fs + INDEX_EPS)) - first
    if hi > rec.n_samples:
        raise OutOfRange(
            f"Segment end {start_s + duration_s:.3f}s exceeds recording duration {rec.duration_seconds:.3f}s",
            location=rec.event_id,
        )
    if hi <= lo:
        raise OutOfRange("Segment selects no samples", location=rec.event_id)
    # the log entry describes the whole event, so a sub-range drops it
    meta = rec.meta if (lo == 0 and hi == rec.n_samples) else None
    return EventRecording(
        event_id=rec.event_id,
        samples=rec.samples[lo:hi],
        sample_rate_hz=fs,
        label=rec.label,
        meta=meta,
        origin_s=t0,
    )


def load_experiment_log(path: Path) -> List[ExperimentLogEntry]:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"Experiment log not found: {path}", location=str(path))
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise MalformedRow("Log has no header line", location=f"{path}:1", row=1) from exc

    columns = tuple(c.strip() for c in frame.columns)
    missing = [c for c in LOG_COLUMNS if c not in columns]
    if missing:
        raise MalformedRow(f"Log header is missing columns: {missing}", location=f"{path}:1", row=1)
    frame.columns = list(columns)

    entries: List[ExperimentLogEntry] = []
    for idx, row in enumerate(frame[list(LOG_COLUMNS)].to_dict(orient="records")):
        try:
            entries.append(ExperimentLogEntry.model_validate({k: v.strip() for k, v in row.items()}))
        except ValidationError as exc:
            err = exc.errors()[0]
            loc = ".".join(str(item) for item in err["loc"])
            raise MalformedRow(f"{loc}: {err['msg']}", location=f"{path}:{idx + 2}", row=idx + 2) from exc
    return entries


def write_experiment_log(entries: Sequence[ExperimentLogEntry], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [entry.model_dump(mode="json") for entry in entries]
    frame = pd.DataFrame(rows, columns=list(LOG_COLUMNS))
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def load_logged_recordings(
    dataset_dir: Path,
    entries: Sequence[ExperimentLogEntry],
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    allow_rate_override: bool = False,
    skip_missing: bool = True,
) -> List[EventRecording]:
    """Load ``samples/<event_id>.csv`` for each log entry, labelled from its location."""
    samples_dir = Path(dataset_dir) / "samples"
    out: List[EventRecording] = []
    for entry in entries:
        path = samples_dir / f"{entry.event_id}.csv"
        if not path.is_file() and skip_missing:
            logger.warning("No samples file for logged event: event_id=%s path=%s", entry.event_id, path)
            continue
        out.append(
            load_recording(
                path,
                sample_rate_hz=sample_rate_hz,
                allow_rate_override=allow_rate_override,
                label=HygieneClass.from_location(entry.location),
            )
        )
    logger.info("Loaded recordings: dataset=%s logged=%d loaded=%d", dataset_dir, len(entries), len(out))
    return out
