from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple
import os

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .domain import BandSpec
from .domain_schemas import ClassifierParams, GeneratorConfig, ModelFamily, ModelSpec
from .errors import InvalidConfig


@dataclass(frozen=True)
class Settings:
    repo_root: Path
    output_dir: Path
    log_level: str
    config_path: Optional[Path]
    allow_rate_override: bool


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in {"1", "true", "yes", "on"}


def load_settings() -> Settings:
    repo_root = Path(os.getenv("HYGIENE_REPO_ROOT", Path(__file__).resolve().parents[1]))
    output_dir = Path(os.getenv("HYGIENE_OUTPUT_DIR", repo_root / "generated"))
    log_level = os.getenv("HYGIENE_LOG_LEVEL", "INFO").strip().upper() or "INFO"
    raw_config = os.getenv("HYGIENE_CONFIG", "").strip()

    return Settings(
        repo_root=repo_root.resolve(),
        output_dir=output_dir.resolve(),
        log_level=log_level,
        config_path=Path(raw_config).resolve() if raw_config else None,
        allow_rate_override=_env_bool("HYGIENE_ALLOW_RATE_OVERRIDE", False),
    )


class PipelineConfig(BaseModel):
    """Every knob of a pipeline run; embedded verbatim in each report file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    input: Optional[str] = None
    out: str = "generated"
    model_path: Optional[str] = None
    band_low_hz: float = 1.0
    band_high_hz: float = 45.0
    filter_order: int = Field(default=2, ge=1)
    sample_rate_hz: float = Field(default=100.0, gt=0)
    allow_rate_override: bool = False
    model: ModelFamily = "svm"
    k: int = Field(default=5, ge=2)
    ratio: float = Field(default=0.8, gt=0, lt=1)
    seed: int = Field(default=7, ge=0)
    n_per_class: int = Field(default=30, ge=1)
    separability: float = Field(default=1.0, ge=0, le=1)
    intensity: float = Field(default=1.0, gt=0)
    select_features: bool = False
    tune: bool = True
    budget: int = Field(default=30, ge=1)
    cv_all: bool = False
    attempts: int = Field(default=10, ge=1)
    pair: str = "all"
    # classifier hyperparameters
    C: float = Field(default=1.0, gt=0)
    gamma: float = Field(default=1.0, gt=0)
    n_trees: int = Field(default=100, ge=1)
    max_depth: Optional[int] = Field(default=None, ge=1)
    min_split: int = Field(default=2, ge=2)
    features_per_split: Optional[int] = Field(default=None, ge=1)
    l2: float = Field(default=1e-4, ge=0)
    max_iter: int = Field(default=1000, ge=1)
    hidden: Tuple[int, ...] = (16, 8)
    learning_rate: float = Field(default=0.01, gt=0)
    patience: int = Field(default=5, ge=1)
    min_delta: float = Field(default=1e-3, ge=0)
    max_epochs: int = Field(default=200, ge=1)

    @field_validator("hidden", mode="before")
    @classmethod
    def parse_hidden(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(int(part) for part in value.replace(" ", "").split(",") if part)
        return value

    @field_validator("pair")
    @classmethod
    def check_pair(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in {"all", "ks-bf", "bf-tf", "tf-ks"}:
            raise ValueError("pair must be one of all, ks-bf, bf-tf, tf-ks")
        return value

    @property
    def band(self) -> BandSpec:
        return BandSpec(low_hz=self.band_low_hz, high_hz=self.band_high_hz, order=self.filter_order)

    def classifier_params(self) -> ClassifierParams:
        return ClassifierParams(
            C=self.C,
            gamma=self.gamma,
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            min_split=self.min_split,
            features_per_split=self.features_per_split,
            l2=self.l2,
            max_iter=self.max_iter,
            hidden=self.hidden,
            learning_rate=self.learning_rate,
            patience=self.patience,
            min_delta=self.min_delta,
            max_epochs=self.max_epochs,
        )

    def model_spec(self, family: Optional[str] = None) -> ModelSpec:
        family = family or self.model
        return ModelSpec(
            family=family,
            params=self.classifier_params(),
            select_features=self.select_features,
            tune=self.tune and family == "svm",
            budget=self.budget,
        )

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            n_per_class=self.n_per_class,
            seed=self.seed,
            separability=self.separability,
            intensity=self.intensity,
            sample_rate_hz=self.sample_rate_hz,
        )

    def as_lines(self) -> str:
        lines = []
        for key, value in self.model_dump(mode="json").items():
            if isinstance(value, list):
                value = ",".join(str(item) for item in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif value is None:
                value = ""
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def read_config_file(path: Path) -> Dict[str, Any]:
    """Read a flat ``key=value`` file, or a flat YAML mapping for .yaml/.yml."""
    if not path.exists():
        raise InvalidConfig(f"Config file not found: {path}", location=str(path))
    text = path.read_text(encoding="utf-8")

    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise InvalidConfig(str(exc), location=str(path)) from exc
        if not isinstance(loaded, dict) or any(isinstance(v, (dict, list)) for v in loaded.values()):
            raise InvalidConfig("YAML config must be a flat mapping", location=str(path))
        return {str(k).replace("-", "_"): v for k, v in loaded.items()}

    out: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"Expected key=value, got {raw.strip()!r}", location=f"{path}:{lineno}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        value = value.strip()
        if value:
            out[key] = value
    return out


def resolve_config(
    settings: Settings,
    file_values: Mapping[str, Any] | None = None,
    flag_values: Mapping[str, Any] | None = None,
) -> PipelineConfig:
    """Merge defaults < settings < config file < flags into a validated config."""
    merged: Dict[str, Any] = {
        "out": str(settings.output_dir),
        "allow_rate_override": settings.allow_rate_override,
    }
    merged.update({k: v for k, v in (file_values or {}).items()})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    try:
        return PipelineConfig.model_validate(merged)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(item) for item in err["loc"])
        raise InvalidConfig(err["msg"], location=loc) from exc
