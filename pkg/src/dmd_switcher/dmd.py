"""Dual-model distillation: label each input by whether two teachers agree."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .errors import ArtifactNotFoundError, DimensionMismatchError, SchemaViolationError
from .models import DatasetManifest, DmdDataset, DmdRecord, DmdSummary, Split
from .teachers.base import Teacher

logger = logging.getLogger(__name__)


def agreement_label(small_pred: int, large_pred: int) -> int:
    return 1 if small_pred == large_pred else 0


def generate_dmd(
    manifest: DatasetManifest,
    split: Split,
    small_teacher: Teacher,
    large_teacher: Teacher,
    max_workers: int = 1,
) -> DmdDataset:
    records = manifest.records_for(split)
    small_outputs = small_teacher.predict_batch(records, max_workers=max_workers)
    large_outputs = large_teacher.predict_batch(records, max_workers=max_workers)

    dmd_records: List[DmdRecord] = []
    for record, small, large in zip(records, small_outputs, large_outputs):
        hidden = small.hidden or []
        if len(hidden) != manifest.feature_dim:
            raise DimensionMismatchError(manifest.feature_dim, len(hidden), f"record {record.record_id!r}")
        dmd_records.append(
            DmdRecord(
                image_path=record.payload_ref,
                last_hidden_layer=[float(value) for value in hidden],
                label=agreement_label(small.prediction, large.prediction),
            )
        )
    logger.info("Generated %d DMD records for split %s", len(dmd_records), split)
    return DmdDataset(
        split=split,
        records=dmd_records,
        provenance={
            "manifest": manifest.name,
            "split": split,
            "small": small_teacher.describe(),
            "large": large_teacher.describe(),
        },
    )


def dumps_dmd(records: Sequence[DmdRecord]) -> str:
    """Serialise to the distilled-data layout: a JSON array of
    ``{"image_path", "last_hidden_layer", "label"}`` objects, four-space indent."""
    return json.dumps([record.model_dump() for record in records], indent=4) + "\n"


def write_dmd(dataset: DmdDataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_dmd(dataset.records))
    return path


def read_dmd(path: str | Path, expected_dim: Optional[int] = None) -> List[DmdRecord]:
    """Read a DMD file; every hidden vector must have the same width, ``expected_dim`` when given."""
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"DMD file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(f"DMD file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise SchemaViolationError(f"DMD file {path} must contain a JSON array")
    records: List[DmdRecord] = []
    for index, item in enumerate(raw):
        try:
            records.append(DmdRecord.model_validate(item))
        except ValidationError as exc:
            raise SchemaViolationError(f"DMD file {path}, entry {index}: {exc}") from exc
    check_widths(records, str(path), expected_dim)
    return records


def check_widths(records: Sequence[DmdRecord], source: str, expected_dim: Optional[int] = None) -> None:
    if not records:
        return
    width = expected_dim if expected_dim is not None else len(records[0].last_hidden_layer)
    for index, record in enumerate(records):
        if len(record.last_hidden_layer) != width:
            raise SchemaViolationError(
                f"{source}, entry {index}: hidden vector has length {len(record.last_hidden_layer)}, expected {width}"
            )


def load_dmd_dataset(path: str | Path, split: Split, expected_dim: Optional[int] = None) -> DmdDataset:
    return DmdDataset(split=split, records=read_dmd(path, expected_dim), provenance={"source": str(path)})


def dmd_summary(dataset: DmdDataset) -> DmdSummary:
    if not dataset.records:
        return DmdSummary(count=0)
    check_widths(dataset.records, f"DMD {dataset.split} split")
    labels = np.array([record.label for record in dataset.records], dtype=np.float64)
    features = np.array([record.last_hidden_layer for record in dataset.records], dtype=np.float64)
    return DmdSummary(
        count=len(dataset.records),
        agree_rate=float(labels.mean()),
        mean_norm=float(np.linalg.norm(features, axis=1).mean()),
    )
