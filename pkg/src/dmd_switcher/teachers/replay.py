from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from ..errors import ArtifactNotFoundError, ReplayMissError, SchemaViolationError
from ..models import Binary, DatasetRecord, Probability, TeacherOutput
from .base import Teacher


class FixtureEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    record_id: str
    prediction: Binary
    probability: Probability
    hidden: Optional[List[float]] = None


def write_fixture(outputs: Mapping[str, TeacherOutput], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries: List[Dict[str, Any]] = []
    for record_id, output in outputs.items():
        entry: Dict[str, Any] = {
            "record_id": record_id,
            "prediction": output.prediction,
            "probability": output.probability,
        }
        if output.hidden is not None:
            entry["hidden"] = output.hidden
        entries.append(entry)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(entries, f)
    return path


def read_fixture(path: str | Path) -> Dict[str, TeacherOutput]:
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"Replay fixture not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(f"Fixture {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise SchemaViolationError(f"Fixture {path} must contain a JSON array")

    fixture: Dict[str, TeacherOutput] = {}
    for index, item in enumerate(raw):
        try:
            entry = FixtureEntry.model_validate(item)
            output = TeacherOutput(prediction=entry.prediction, probability=entry.probability, hidden=entry.hidden)
        except ValidationError as exc:
            raise SchemaViolationError(f"Fixture {path}, entry {index}: {exc}") from exc
        if entry.record_id in fixture:
            raise SchemaViolationError(f"Fixture {path} repeats record_id {entry.record_id!r}")
        fixture[entry.record_id] = output
    return fixture


class ReplayTeacher(Teacher):
    """Answers from a recorded fixture, e.g. outputs captured from a real model."""

    kind = "replay"

    def __init__(self, role: str, fixture: Mapping[str, TeacherOutput], feature_dim: Optional[int] = None) -> None:
        super().__init__(role, feature_dim if role == "small" else None)
        self._fixture = dict(fixture)

    @classmethod
    def from_file(cls, role: str, path: str | Path, feature_dim: Optional[int] = None) -> "ReplayTeacher":
        return cls(role, read_fixture(path), feature_dim)

    def _predict(self, record: DatasetRecord) -> TeacherOutput:
        try:
            return self._fixture[record.record_id]
        except KeyError:
            raise ReplayMissError(record.record_id) from None

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "fixture_size": len(self._fixture)}
