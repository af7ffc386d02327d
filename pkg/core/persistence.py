"""
Model files: versioned JSON envelopes around regressors, deformable models,
hyper-models and generated models.

    {
      "format_version": 1,
      "kind": "regressor" | "deformable" | "hypermodel" | "generated",
      "payload": {...},
      "metadata": {"created_at": ..., "tool_version": ..., "provenance": {...}}
    }

Floats are written with Python's shortest round-trip repr and keys are
sorted, so write -> read -> write reproduces the file byte for byte.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from core import __version__
from core.errors import FormatError, InvalidArgumentError, PreconditionError
from core.hypermodel import HyperModel
from core.pipeline import GeneratedModel, Provenance, SourceTask
from core.regressors import Regressor, RegressorFamily
from core.ssm import DeformableModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

Kind = Literal["regressor", "deformable", "hypermodel", "generated"]


class Metadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    created_at: str
    tool_version: str
    provenance: dict[str, Any] = {}


class ModelFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    format_version: int = FORMAT_VERSION
    kind: Kind
    payload: dict[str, Any]
    metadata: Metadata


def regressor_payload(r: Regressor) -> dict[str, Any]:
    """Flat regressor record: family tag, degree for polynomials, coefficients, diagnostics"""
    payload = {
        "family": r.family.kind,
        "coefficients": r.coefficients.tolist(),
        "train_mse": r.train_mse,
        "converged": r.converged,
        "iterations": r.iterations,
    }
    if r.family.degree is not None:
        payload["degree"] = r.family.degree
    return payload


def regressor_from_payload(payload: dict[str, Any]) -> Regressor:
    family = RegressorFamily(kind=payload["family"], degree=payload.get("degree"))
    return Regressor(
        family=family,
        coefficients=payload["coefficients"],
        train_mse=payload.get("train_mse", 0.0),
        converged=payload.get("converged", True),
        iterations=payload.get("iterations", 0),
    )


def _optional_list(arr: np.ndarray | None) -> list | None:
    return None if arr is None else arr.tolist()


def _generated_payload(g: GeneratedModel) -> dict[str, Any]:
    return {
        "regressor": regressor_payload(g.regressor),
        "condition": g.condition.tolist(),
        "params": g.params.tolist(),
        "inputs": _optional_list(g.inputs),
        "shape": _optional_list(g.shape),
        "provenance": g.provenance.model_dump(mode="json"),
    }


def _generated_from_payload(payload: dict[str, Any]) -> GeneratedModel:
    return GeneratedModel(
        regressor=regressor_from_payload(payload["regressor"]),
        condition=payload["condition"],
        params=payload["params"],
        inputs=payload.get("inputs"),
        shape=payload.get("shape"),
        provenance=Provenance.model_validate(payload["provenance"]),
    )


def to_model_file(obj: Any, provenance: dict[str, Any] | None = None) -> ModelFile:
    """Wrap a regressor, deformable model, hyper-model or generated model"""
    if isinstance(obj, Regressor):
        kind, payload = "regressor", regressor_payload(obj)
    elif isinstance(obj, DeformableModel):
        kind, payload = "deformable", obj.model_dump(mode="json")
    elif isinstance(obj, HyperModel):
        kind, payload = "hypermodel", obj.model_dump(mode="json")
    elif isinstance(obj, GeneratedModel):
        kind, payload = "generated", _generated_payload(obj)
    else:
        raise InvalidArgumentError(f"cannot store {type(obj).__name__} in a model file")

    metadata = Metadata(
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        tool_version=__version__,
        provenance=provenance or {},
    )
    return ModelFile(kind=kind, payload=payload, metadata=metadata)


def from_model_file(mf: ModelFile) -> Regressor | DeformableModel | HyperModel | GeneratedModel:
    """Rebuild the object stored in a model file"""
    try:
        if mf.kind == "regressor":
            return regressor_from_payload(mf.payload)
        if mf.kind == "deformable":
            return DeformableModel.model_validate(mf.payload)
        if mf.kind == "hypermodel":
            return HyperModel.model_validate(mf.payload)
        return _generated_from_payload(mf.payload)
    except (ValidationError, KeyError, TypeError, ValueError) as e:
        raise FormatError(f"invalid {mf.kind} payload: {e}") from e


def dumps(mf: ModelFile) -> str:
    return json.dumps(mf.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def loads(text: str) -> ModelFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"model file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise FormatError("model file must hold a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported model file format version {version!r}")
    try:
        return ModelFile.model_validate(data)
    except ValidationError as e:
        raise FormatError(f"malformed model file: {e}") from e


def write_model_file(path: str | Path, mf: ModelFile) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(mf), encoding="utf-8")
    logger.info(f"Wrote {mf.kind} model file {path}")
    return path


def read_model_file(path: str | Path) -> ModelFile:
    return loads(Path(path).read_text(encoding="utf-8"))


def save(path: str | Path, obj: Any, provenance: dict[str, Any] | None = None) -> Path:
    return write_model_file(path, to_model_file(obj, provenance))


def load(path: str | Path) -> Regressor | DeformableModel | HyperModel | GeneratedModel:
    return from_model_file(read_model_file(path))


def source_provenance(
    task_id: str,
    condition: list[float] | None = None,
    input_range: tuple[float, float] | None = None,
) -> dict[str, Any]:
    """Metadata provenance of a source regressor file"""
    provenance: dict[str, Any] = {"task_id": task_id}
    if condition is not None:
        provenance["condition"] = [float(c) for c in condition]
    if input_range is not None:
        provenance["input_range"] = [float(input_range[0]), float(input_range[1])]
    return provenance


def load_source_task(path: str | Path) -> tuple[SourceTask, tuple[float, float] | None]:
    """Read a regressor file as a source task plus its training input range"""
    mf = read_model_file(path)
    if mf.kind != "regressor":
        raise PreconditionError(f"{path} holds a {mf.kind}, source tasks need a regressor")
    provenance = mf.metadata.provenance
    if "condition" not in provenance:
        raise PreconditionError(f"{path} has no condition attached")
    task = SourceTask(
        id=provenance.get("task_id", Path(path).stem),
        regressor=from_model_file(mf),
        condition=provenance["condition"],
    )
    input_range = provenance.get("input_range")
    return task, None if input_range is None else (float(input_range[0]), float(input_range[1]))
