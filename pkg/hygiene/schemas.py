from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .domain_schemas import ModelFamily

MODEL_FORMAT_VERSION = 1


class ModelPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["binary", "ovr"]
    classes: List[int] = Field(min_length=2)
    feature_indices: List[int] = Field(min_length=1)
    heads: List[Dict[str, Any]] = Field(min_length=1)

    @model_validator(mode="after")
    def check_heads(self) -> "ModelPayload":
        expected = 1 if self.kind == "binary" else len(self.classes)
        if len(self.heads) != expected:
            raise ValueError(f"{self.kind} model needs {expected} heads, got {len(self.heads)}")
        if self.kind == "binary" and len(self.classes) != 2:
            raise ValueError("binary model needs exactly 2 classes")
        return self


class ModelDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: Literal[1] = MODEL_FORMAT_VERSION
    family: ModelFamily
    payload: ModelPayload


class SplitPlanDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train: List[int]
    test: List[int]
    seed: int = Field(ge=0)
    ratio: float = Field(gt=0, lt=1)


class FoldPlanDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    folds: List[List[int]] = Field(min_length=2)
    seed: int = Field(ge=0)


class ValidationIssueResponse(BaseModel):
    severity: str
    code: str
    location: str
    message: str


class LogMatchResponse(BaseModel):
    event_id: str
    logged_duration_s: float
    recorded_duration_s: Optional[float] = None
    status: Literal["matched", "missing", "mismatched"]


class ValidationResponse(BaseModel):
    ok: bool
    matched: int
    missing: int
    mismatched: int
    entries: List[LogMatchResponse] = Field(default_factory=list)
    issues: List[ValidationIssueResponse] = Field(default_factory=list)
