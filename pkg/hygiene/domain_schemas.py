from __future__ import annotations

import datetime as dt
from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NYQUIST_AT_100_HZ = 50.0

LOG_COLUMNS = (
    "date",
    "start_time",
    "duration_s",
    "building_type",
    "location",
    "position",
    "event_type",
    "sensor_distance_m",
    "event_id",
)

ModelFamily = Literal["dt", "rf", "nb", "lr", "svm", "nn", "majority"]
COMPARE_FAMILIES: Tuple[str, ...] = ("dt", "rf", "nb", "lr", "svm", "nn")


class ExperimentLogEntry(BaseModel):
    """One manually logged hygiene event (one row of the experiment log)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    event_id: str = Field(min_length=1)
    date: dt.date
    start_time: dt.time
    duration_s: float = Field(gt=0, allow_inf_nan=False)
    building_type: str = ""
    location: str = Field(min_length=1)
    position: str = ""
    event_type: str = ""
    sensor_distance_m: float = Field(ge=0, allow_inf_nan=False)

    @field_validator("event_id", "location")
    @classmethod
    def ensure_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("must be non-empty")
        return value.strip()


class ClassSignature(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    duration_min_s: float = Field(gt=0)
    duration_max_s: float = Field(gt=0)
    amplitude: float = Field(gt=0)
    noise_std: float = Field(gt=0)
    transient_scale: float = Field(gt=0)
    oscillation_hz: float = Field(gt=0, lt=NYQUIST_AT_100_HZ)
    decay_s: float = Field(gt=0)

    @model_validator(mode="after")
    def check_duration_range(self) -> "ClassSignature":
        if self.duration_max_s < self.duration_min_s:
            raise ValueError("duration_max_s must be >= duration_min_s")
        return self


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_per_class: int = Field(default=30, ge=1)
    seed: int = Field(default=7, ge=0)
    separability: float = Field(default=1.0, ge=0.0, le=1.0)
    intensity: float = Field(default=1.0, gt=0)
    noise_scale: float = Field(default=1.0, gt=0)
    sample_rate_hz: float = Field(default=100.0, gt=0)
    start_date: dt.date = dt.date(2021, 6, 14)
    # keyed by class short code (ks/bf/tf); values are partial ClassSignature fields
    overrides: Dict[str, Dict[str, float]] = Field(default_factory=dict)

    @field_validator("overrides")
    @classmethod
    def check_override_keys(cls, value: Dict[str, Dict[str, float]]) -> Dict[str, Dict[str, float]]:
        allowed = set(ClassSignature.model_fields)
        for key, fields in value.items():
            if key not in {"ks", "bf", "tf"}:
                raise ValueError(f"unknown class key in overrides: {key}")
            unknown = set(fields) - allowed
            if unknown:
                raise ValueError(f"unknown signature fields for {key}: {sorted(unknown)}")
        return value


class ClassifierParams(BaseModel):
    """Hyperparameters for every classifier family; each family reads its own."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    standardize: bool = True
    # svm
    C: float = Field(default=1.0, gt=0)
    gamma: float = Field(default=1.0, gt=0)
    svm_tol: float = Field(default=1e-3, gt=0)
    svm_max_iter: int = Field(default=100_000, ge=1)
    # dt / rf
    max_depth: Optional[int] = Field(default=None, ge=1)
    min_split: int = Field(default=2, ge=2)
    n_trees: int = Field(default=100, ge=1)
    features_per_split: Optional[int] = Field(default=None, ge=1)
    bootstrap: bool = True
    # nb
    var_smoothing: float = Field(default=1e-9, gt=0)
    # lr
    l2: float = Field(default=1e-4, ge=0)
    max_iter: int = Field(default=1000, ge=1)
    grad_tol: float = Field(default=1e-6, gt=0)
    # nn
    hidden: Tuple[int, ...] = (16, 8)
    learning_rate: float = Field(default=0.01, gt=0)
    patience: int = Field(default=5, ge=1)
    min_delta: float = Field(default=1e-3, ge=0)
    max_epochs: int = Field(default=200, ge=1)
    batch_size: Optional[int] = Field(default=32, ge=1)
    validation_fraction: float = Field(default=0.2, gt=0, lt=1)

    @field_validator("hidden")
    @classmethod
    def check_hidden(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value or any(width < 1 for width in value):
            raise ValueError("hidden widths must be positive")
        return value


class ModelSpec(BaseModel):
    """What to train and how to pick its inputs: family, params, selection, tuning."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: ModelFamily = "svm"
    params: ClassifierParams = Field(default_factory=ClassifierParams)
    select_features: bool = False
    subset_size: int = Field(default=3, ge=1)
    tune: bool = False
    budget: int = Field(default=30, ge=1)
