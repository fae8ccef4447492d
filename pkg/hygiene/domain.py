from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domain_schemas import ExperimentLogEntry
from .errors import (
    EmptyData,
    EmptyRecording,
    InvalidBand,
    InvalidLabel,
    InvalidRecording,
    LengthMismatch,
    NonFiniteSample,
)

DEFAULT_SAMPLE_RATE_HZ = 100.0
DURATION_TOLERANCE_S = 1.0

FEATURE_NAMES: Tuple[str, ...] = (
    "Kurtosis",
    "Standard Deviation",
    "Entropy",
    "Highest Peak",
    "Lowest Peak",
    "Location of Highest Peak",
    "Location of Lowest Peak",
    "Peak Difference",
    "Mean",
    "Period",
)
N_FEATURES = len(FEATURE_NAMES)
ALL_FEATURES: Tuple[int, ...] = tuple(range(1, N_FEATURES + 1))


class HygieneClass(IntEnum):
    KITCHEN_SINK = 0
    BATHROOM_FAUCET = 1
    TOILET_FLUSHING = 2

    @property
    def short(self) -> str:
        return _SHORT[self]

    @property
    def title(self) -> str:
        return _TITLE[self]

    @classmethod
    def from_location(cls, location: str) -> "HygieneClass":
        key = " ".join(location.lower().replace("_", " ").replace("-", " ").split())
        for member in cls:
            if key in (member.title.lower(), member.short.lower(), member.name.lower().replace("_", " ")):
                return member
        if key in ("toilet", "toilet tank"):
            return cls.TOILET_FLUSHING
        raise InvalidLabel(f"Unknown hygiene location: {location!r}")

    @classmethod
    def from_code(cls, code: int) -> "HygieneClass":
        try:
            return cls(int(code))
        except ValueError as exc:
            raise InvalidLabel(f"Unknown class code: {code}") from exc


_SHORT: Dict[HygieneClass, str] = {
    HygieneClass.KITCHEN_SINK: "KS",
    HygieneClass.BATHROOM_FAUCET: "BF",
    HygieneClass.TOILET_FLUSHING: "TF",
}
_TITLE: Dict[HygieneClass, str] = {
    HygieneClass.KITCHEN_SINK: "Kitchen Sink",
    HygieneClass.BATHROOM_FAUCET: "Bathroom Faucet",
    HygieneClass.TOILET_FLUSHING: "Toilet Flushing",
}
CLASS_CODES: Tuple[int, ...] = tuple(int(c) for c in HygieneClass)


@dataclass(frozen=True)
class BandSpec:
    low_hz: float = 1.0
    high_hz: float = 45.0
    order: int = 2

    def validate(self, sample_rate_hz: float) -> None:
        nyquist = sample_rate_hz / 2.0
        if not (0.0 < self.low_hz < self.high_hz < nyquist):
            raise InvalidBand(
                f"Band {self.low_hz}-{self.high_hz} Hz must satisfy 0 < low < high < {nyquist} Hz",
                location="band",
            )
        if self.order < 1:
            raise InvalidBand(f"Filter order must be >= 1, got {self.order}", location="band")


@dataclass(frozen=True, eq=False)
class EventRecording:
    """One segmented hygiene event: fixed-rate velocity samples plus metadata."""

    event_id: str
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    label: Optional[HygieneClass] = None
    meta: Optional[ExperimentLogEntry] = None
    # seconds from the start of the source recording to samples[0]
    origin_s: float = 0.0

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if samples.size == 0:
            raise EmptyRecording("Recording has no samples", location=self.event_id)
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise NonFiniteSample(f"Sample {bad} is not finite", location=self.event_id, row=bad)
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise InvalidRecording(f"Sample rate must be positive, got {self.sample_rate_hz}", location=self.event_id)
        if not (self.origin_s >= 0 and math.isfinite(self.origin_s)):
            raise InvalidRecording(f"Origin must be a non-negative time, got {self.origin_s}", location=self.event_id)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.label is not None:
            object.__setattr__(self, "label", HygieneClass(self.label))
        if self.meta is not None:
            recorded = samples.size / self.sample_rate_hz
            if abs(recorded - self.meta.duration_s) > DURATION_TOLERANCE_S:
                raise InvalidRecording(
                    f"Recorded duration {recorded:.2f}s differs from logged {self.meta.duration_s:.2f}s",
                    location=self.event_id,
                )

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class FeatureVector:
    """Ten features in canonical order; ``feature(i)`` uses the 1-based index."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if len(values) != N_FEATURES:
            raise ValueError(f"FeatureVector needs {N_FEATURES} values, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("FeatureVector values must be finite")
        if values[7] != values[3] - values[4] or values[7] < 0:
            raise ValueError("Peak difference must equal highest minus lowest peak")
        if not (0.0 <= values[5] <= 1.0 and 0.0 <= values[6] <= 1.0):
            raise ValueError("Peak locations must lie in [0, 1]")
        if values[2] < 0 or values[9] < 0:
            raise ValueError("Entropy and period must be non-negative")
        object.__setattr__(self, "values", values)

    def feature(self, index: int) -> float:
        return self.values[index - 1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Rows of features (n x d) with parallel class labels.

    ``feature_indices`` records which canonical 1-based features the columns hold,
    so a matrix restricted to a selected subset still knows its columns.
    """

    values: np.ndarray
    labels: np.ndarray
    feature_indices: Tuple[int, ...] = ALL_FEATURES

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(1, -1)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if values.shape[0] != labels.shape[0]:
            raise LengthMismatch(f"{values.shape[0]} feature rows but {labels.shape[0]} labels")
        if values.shape[0] == 0:
            raise EmptyData("Feature matrix has no rows")
        indices = tuple(int(i) for i in self.feature_indices)
        if len(indices) != values.shape[1]:
            raise LengthMismatch(f"{values.shape[1]} columns but {len(indices)} feature indices")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_indices", indices)

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], labels: Sequence[int]) -> "FeatureMatrix":
        return cls(np.array([v.values for v in vectors], dtype=np.float64).reshape(len(vectors), N_FEATURES), np.asarray(labels))

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.values.shape[1])

    @property
    def classes(self) -> Tuple[int, ...]:
        return tuple(int(c) for c in np.unique(self.labels))

    def rows(self) -> List[FeatureVector]:
        return [FeatureVector(tuple(row)) for row in self.values]

    def take(self, rows: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(self.values[idx], self.labels[idx], self.feature_indices)

    def select(self, feature_indices: Sequence[int]) -> "FeatureMatrix":
        positions = [self.feature_indices.index(int(i)) for i in feature_indices]
        return FeatureMatrix(self.values[:, positions], self.labels, tuple(int(i) for i in feature_indices))


@dataclass(frozen=True, eq=False)
class ScalerParams:
    """Per-column mean/std; degenerate (zero-variance) columns keep std 1."""

    mean: np.ndarray
    std: np.ndarray
    degenerate: Tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        std = np.array(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != std.shape:
            raise LengthMismatch("Scaler mean and std lengths differ")
        if np.any(std <= 0):
            raise ValueError("Scaler std entries must be positive")
        degenerate = tuple(bool(d) for d in self.degenerate) or (False,) * mean.size
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "degenerate", degenerate)

    @property
    def n_features(self) -> int:
        return int(self.mean.size)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.std + self.mean

    def to_payload(self) -> Dict[str, list]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "degenerate": list(self.degenerate)}

    @classmethod
    def from_payload(cls, payload: Dict[str, list]) -> "ScalerParams":
        return cls(np.asarray(payload["mean"]), np.asarray(payload["std"]), tuple(payload.get("degenerate", ())))
