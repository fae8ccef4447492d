from __future__ import annotations

import datetime as dt
from typing import List, Tuple

import numpy as np
import pytest

from hygiene.domain import BandSpec, EventRecording, FeatureMatrix
from hygiene.domain_schemas import ExperimentLogEntry, GeneratorConfig
from hygiene.services.feature_service import extract_matrix
from hygiene.services.signal_service import bandpass_filter
from hygiene.services.synth_service import generate_dataset


def log_entry(event_id: str, duration_s: float, location: str = "Kitchen Sink") -> ExperimentLogEntry:
    return ExperimentLogEntry(
        event_id=event_id,
        date=dt.date(2021, 6, 14),
        start_time=dt.time(9, 30),
        duration_s=duration_s,
        building_type="Residential house",
        location=location,
        position="Kitchen counter",
        event_type="Water flow",
        sensor_distance_m=1.5,
    )


def recording(event_id: str, n_samples: int, seed: int = 0) -> EventRecording:
    samples = np.random.default_rng(seed).standard_normal(n_samples)
    return EventRecording(event_id=event_id, samples=samples)


@pytest.fixture(scope="session")
def default_dataset() -> Tuple[List[EventRecording], List[ExperimentLogEntry]]:
    """What ``synth --n-per-class 30 --seed 7`` generates."""
    return generate_dataset(GeneratorConfig(n_per_class=30, seed=7))


@pytest.fixture(scope="session")
def default_matrix(default_dataset) -> FeatureMatrix:
    recordings, _ = default_dataset
    band = BandSpec()
    return extract_matrix([bandpass_filter(rec, band) for rec in recordings])


@pytest.fixture
def separable_matrix() -> FeatureMatrix:
    """30 rows per class; column 1 alone separates the classes by a wide gap."""
    rng = np.random.default_rng(11)
    labels = np.repeat([0, 1, 2], 30)
    values = rng.normal(size=(90, 10))
    values[:, 0] = labels * 10.0 + rng.uniform(0.0, 1.0, size=90)
    return FeatureMatrix(values, labels)
