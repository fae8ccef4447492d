"""Versioned JSON model documents: ``{"format_version": 1, "family": ..., "payload": ...}``.

``json`` writes floats with the shortest repr that round-trips, so a loaded
model reproduces the saved model's scores bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

from pydantic import ValidationError

from ..domain import ALL_FEATURES
from ..errors import FileMissing, MalformedRow
from ..schemas import ModelDocument, ModelPayload
from .base import BinaryClassifier, Model, OvrModel
from .baseline import MajorityModel
from .forest import ForestModel
from .gnb import GnbModel
from .logreg import LogRegModel
from .mlp import MlpModel
from .svm import SvmModel
from .tree import TreeModel

HEAD_TYPES = {
    "svm": SvmModel,
    "dt": TreeModel,
    "rf": ForestModel,
    "nb": GnbModel,
    "lr": LogRegModel,
    "nn": MlpModel,
    "majority": MajorityModel,
}


def model_family(model: Model) -> str:
    heads = (model.head,) if isinstance(model, BinaryClassifier) else model.heads
    return heads[0].family


def to_document(model: Model, feature_indices: Sequence[int] = ALL_FEATURES) -> Dict[str, Any]:
    if isinstance(model, BinaryClassifier):
        payload = ModelPayload(
            kind="binary",
            classes=list(model.classes),
            feature_indices=list(feature_indices),
            heads=[model.head.to_payload()],
        )
    else:
        payload = ModelPayload(
            kind="ovr",
            classes=list(model.classes),
            feature_indices=list(feature_indices),
            heads=[head.to_payload() for head in model.heads],
        )
    return ModelDocument(family=model_family(model), payload=payload).model_dump(mode="json")


def from_document(data: Dict[str, Any], location: str = "model") -> Tuple[Model, Tuple[int, ...]]:
    try:
        doc = ModelDocument.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(item) for item in err["loc"])
        raise MalformedRow(f"{loc}: {err['msg']}", location=location) from exc

    head_type = HEAD_TYPES[doc.family]
    try:
        heads = tuple(head_type.from_payload(head) for head in doc.payload.heads)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRow(f"Invalid {doc.family} head payload: {exc}", location=location) from exc

    classes = tuple(doc.payload.classes)
    if doc.payload.kind == "binary":
        model: Model = BinaryClassifier(negative=classes[0], positive=classes[1], head=heads[0])
    else:
        model = OvrModel(classes=classes, heads=heads)
    return model, tuple(doc.payload.feature_indices)


def save_model(model: Model, path: Path, feature_indices: Sequence[int] = ALL_FEATURES) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_document(model, feature_indices), indent=2) + "\n", encoding="utf-8")
    return path


def load_model(path: Path) -> Tuple[Model, Tuple[int, ...]]:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"Model file not found: {path}", location=str(path))
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedRow(f"Invalid JSON: {exc.msg}", location=f"{path}:{exc.lineno}", row=exc.lineno) from exc
    return from_document(data, location=str(path))
