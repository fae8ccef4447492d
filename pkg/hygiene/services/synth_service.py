"""Seeded synthetic hygiene events standing in for a real recorded corpus.

Every class shares one waveform model: white flow noise, damped open/close
bursts at both ends of the event and an exponentially decaying oscillation.
Classes differ only in the parameters of that model (``ClassSignature``).
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ..domain import EventRecording, HygieneClass
from ..domain_schemas import ClassSignature, ExperimentLogEntry, GeneratorConfig
from ..errors import InvalidConfig
from ..rng import derive_seed, make_rng
from .signal_service import write_experiment_log, write_recording

logger = logging.getLogger(__name__)

BURST_HZ = 8.0
BURST_DECAY_S = 0.3
GAIN_JITTER = 0.1

DEFAULT_SIGNATURES: Dict[HygieneClass, ClassSignature] = {
    # steady broadband flow with a faint pipe resonance
    HygieneClass.KITCHEN_SINK: ClassSignature(
        duration_min_s=8.0,
        duration_max_s=30.0,
        amplitude=10.0,
        noise_std=15.0,
        transient_scale=10.0,
        oscillation_hz=12.0,
        decay_s=30.0,
    ),
    # valve open/close hits dominate
    HygieneClass.BATHROOM_FAUCET: ClassSignature(
        duration_min_s=5.0,
        duration_max_s=20.0,
        amplitude=10.0,
        noise_std=18.0,
        transient_scale=600.0,
        oscillation_hz=12.0,
        decay_s=30.0,
    ),
    # tank refill: slow decaying oscillation over a long event
    HygieneClass.TOILET_FLUSHING: ClassSignature(
        duration_min_s=40.0,
        duration_max_s=70.0,
        amplitude=150.0,
        noise_std=10.0,
        transient_scale=20.0,
        oscillation_hz=3.0,
        decay_s=15.0,
    ),
}

_LOG_DETAILS: Dict[HygieneClass, Tuple[str, str, float]] = {
    HygieneClass.KITCHEN_SINK: ("Kitchen counter", "Water flow", 1.5),
    HygieneClass.BATHROOM_FAUCET: ("Bathroom vanity", "Water flow", 2.0),
    HygieneClass.TOILET_FLUSHING: ("Bathroom floor", "Flush", 1.0),
}
BUILDING_TYPE = "Residential house"
EVENTS_PER_DAY = 12

ConfigLike = Union[GeneratorConfig, Mapping[str, Any]]


def as_generator_config(cfg: ConfigLike) -> GeneratorConfig:
    if isinstance(cfg, GeneratorConfig):
        return cfg
    try:
        return GeneratorConfig.model_validate(dict(cfg))
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(item) for item in err["loc"])
        raise InvalidConfig(err["msg"], location=loc or "generator") from exc


def _overridden(cls: HygieneClass, cfg: GeneratorConfig) -> ClassSignature:
    base = DEFAULT_SIGNATURES[cls].model_dump()
    base.update(cfg.overrides.get(cls.short.lower(), {}))
    try:
        return ClassSignature.model_validate(base)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise InvalidConfig(err["msg"], location=f"overrides.{cls.short.lower()}") from exc


def class_signature(cls: HygieneClass, cfg: ConfigLike) -> ClassSignature:
    """Signature of ``cls`` pulled toward the all-class mean by ``1 - separability``."""
    cfg = as_generator_config(cfg)
    signatures = {member: _overridden(member, cfg).model_dump() for member in HygieneClass}
    own = signatures[HygieneClass(cls)]
    blended: Dict[str, float] = {}
    for name, value in own.items():
        neutral = float(np.mean([sig[name] for sig in signatures.values()]))
        blended[name] = (1.0 - cfg.separability) * neutral + cfg.separability * value
    signature = ClassSignature.model_validate(blended)
    if signature.oscillation_hz >= cfg.sample_rate_hz / 2.0:
        raise InvalidConfig(
            f"Oscillation {signature.oscillation_hz} Hz is above Nyquist for {cfg.sample_rate_hz} Hz",
            location=f"overrides.{HygieneClass(cls).short.lower()}",
        )
    return signature


def event_id(cls: HygieneClass, event_index: int) -> str:
    return f"{HygieneClass(cls).short}-{event_index:03d}"


def generate_event(cls: HygieneClass, cfg: ConfigLike, event_index: int) -> EventRecording:
    """One labelled recording, a pure function of (seed, class, event_index).

    The random stream depends on (seed, event_index) only, so classes with equal
    signatures (``separability=0``) produce identical events.
    """
    cfg = as_generator_config(cfg)
    if event_index < 0:
        raise InvalidConfig(f"event_index must be >= 0, got {event_index}", location="event_index")
    cls = HygieneClass(cls)
    sig = class_signature(cls, cfg)
    fs = cfg.sample_rate_hz
    rng = make_rng(derive_seed(cfg.seed, event_index))

    duration = sig.duration_min_s + rng.uniform() * (sig.duration_max_s - sig.duration_min_s)
    gain = rng.uniform(1.0 - GAIN_JITTER, 1.0 + GAIN_JITTER)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    n = max(int(round(duration * fs)), 4)
    noise = rng.standard_normal(n)

    t = np.arange(n) / fs
    tail = t[-1] - t
    bursts = np.exp(-t / BURST_DECAY_S) * np.sin(2.0 * math.pi * BURST_HZ * t)
    bursts += np.exp(-tail / BURST_DECAY_S) * np.sin(2.0 * math.pi * BURST_HZ * tail)
    oscillation = np.exp(-t / sig.decay_s) * np.sin(2.0 * math.pi * sig.oscillation_hz * t + phase)

    samples = cfg.intensity * gain * (
        sig.noise_std * cfg.noise_scale * noise
        + sig.transient_scale * bursts
        + sig.amplitude * oscillation
    )
    return EventRecording(event_id=event_id(cls, event_index), samples=samples, sample_rate_hz=fs, label=cls)


def _log_entry(rec: EventRecording, cls: HygieneClass, position: int, cfg: GeneratorConfig) -> ExperimentLogEntry:
    where, kind, distance = _LOG_DETAILS[cls]
    minutes = 7 * 60 + (position % EVENTS_PER_DAY) * 53
    return ExperimentLogEntry(
        event_id=rec.event_id,
        date=cfg.start_date + dt.timedelta(days=position // EVENTS_PER_DAY),
        start_time=dt.time(hour=minutes // 60, minute=minutes % 60),
        duration_s=rec.duration_seconds,
        building_type=BUILDING_TYPE,
        location=cls.title,
        position=where,
        event_type=kind,
        sensor_distance_m=distance,
    )


def generate_dataset(cfg: ConfigLike) -> Tuple[List[EventRecording], List[ExperimentLogEntry]]:
    """``n_per_class`` events per class in class-code order, each with its log row."""
    cfg = as_generator_config(cfg)
    recordings: List[EventRecording] = []
    entries: List[ExperimentLogEntry] = []
    for cls in HygieneClass:
        for index in range(cfg.n_per_class):
            rec = generate_event(cls, cfg, index)
            entry = _log_entry(rec, cls, len(entries), cfg)
            recordings.append(
                EventRecording(
                    event_id=rec.event_id,
                    samples=rec.samples,
                    sample_rate_hz=rec.sample_rate_hz,
                    label=cls,
                    meta=entry,
                )
            )
            entries.append(entry)
    logger.info(
        "Generated dataset: n_per_class=%d seed=%d separability=%.3f events=%d",
        cfg.n_per_class,
        cfg.seed,
        cfg.separability,
        len(recordings),
    )
    return recordings, entries


def write_dataset(
    out_dir: Path,
    recordings: List[EventRecording],
    entries: List[ExperimentLogEntry],
    cfg: ConfigLike,
) -> Path:
    """Write ``samples/<event_id>.csv``, ``experiment_log.csv`` and ``manifest.json``."""
    cfg = as_generator_config(cfg)
    out_dir = Path(out_dir)
    for rec in recordings:
        write_recording(rec, out_dir / "samples" / f"{rec.event_id}.csv")
    write_experiment_log(entries, out_dir / "experiment_log.csv")

    manifest = {
        "generator": cfg.model_dump(mode="json"),
        "signatures": {cls.short: class_signature(cls, cfg).model_dump() for cls in HygieneClass},
        "n_events": len(recordings),
        "event_ids": [rec.event_id for rec in recordings],
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote dataset: dir=%s events=%d", out_dir, len(recordings))
    return out_dir
