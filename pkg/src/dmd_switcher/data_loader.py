from __future__ import annotations

import hashlib
import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence

import pandas as pd

from .errors import (
    ArtifactNotFoundError,
    DuplicateRecordError,
    GeometryRangeError,
    MalformedLineError,
    NonBinaryLabelError,
    SchemaViolationError,
    UnknownSplitError,
)
from .models import SPLITS, DatasetManifest, DatasetRecord, YoloLabelLine

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["record_id", "payload_ref", "label", "split"]
# directory names used by exported YOLO datasets
YOLO_SPLIT_DIRS = {"train": "train", "valid": "validation", "test": "test"}


def parse_yolo_label(text_line: str) -> YoloLabelLine:
    tokens = text_line.split()
    if len(tokens) != 5:
        raise MalformedLineError(text_line, f"expected 5 tokens, found {len(tokens)}")
    try:
        values = [float(token) for token in tokens]
    except ValueError as exc:
        raise MalformedLineError(text_line, "non-numeric token") from exc
    if not math.isfinite(values[0]):
        raise MalformedLineError(text_line, "non-finite class index")
    class_index = int(values[0])
    if class_index < 0:
        raise MalformedLineError(text_line, "negative class index")
    geometry = values[1:]
    if any(not 0.0 <= value <= 1.0 for value in geometry):
        raise GeometryRangeError(f"Bounding box values outside [0, 1] in {text_line!r}")
    cx, cy, w, h = geometry
    return YoloLabelLine(class_index=class_index, cx=cx, cy=cy, w=w, h=h)


def derive_binary_label(label_line: YoloLabelLine, positive_class: int) -> int:
    return 1 if label_line.class_index == positive_class else 0


def read_yolo_label_file(path: str | Path) -> List[YoloLabelLine]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [parse_yolo_label(line) for line in lines if line.strip()]


def _parse_label(raw: str, record_id: str) -> int:
    if raw not in ("0", "1"):
        raise NonBinaryLabelError(f"Record {record_id!r} has non-binary label {raw!r}")
    return int(raw)


def load_manifest(manifest_path: str | Path, feature_dim: int = 1536, name: str | None = None) -> DatasetManifest:
    """Load a ``record_id,payload_ref,label,split`` manifest with a header line."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ArtifactNotFoundError(f"Manifest not found: {manifest_path}")
    try:
        df = pd.read_csv(manifest_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise SchemaViolationError(f"Manifest {manifest_path} is empty; a header line is required") from exc
    except pd.errors.ParserError as exc:
        raise SchemaViolationError(f"Manifest {manifest_path} cannot be parsed: {exc}") from exc
    missing = [column for column in MANIFEST_COLUMNS if column not in df.columns]
    if missing:
        raise SchemaViolationError(f"Manifest {manifest_path} lacks columns {missing}")

    records: List[DatasetRecord] = []
    seen: set[str] = set()
    for row in df[MANIFEST_COLUMNS].itertuples(index=False):
        record_id = row.record_id.strip()
        if not record_id:
            raise SchemaViolationError(f"Manifest {manifest_path} has an empty record_id")
        if record_id in seen:
            raise DuplicateRecordError(record_id)
        seen.add(record_id)
        split = row.split.strip()
        if split not in SPLITS:
            raise UnknownSplitError(f"Record {record_id!r} has unknown split {split!r}")
        records.append(
            DatasetRecord(
                record_id=record_id,
                payload_ref=row.payload_ref.strip(),
                label=_parse_label(row.label.strip(), record_id),
                split=split,
            )
        )

    split_counts = {split: sum(1 for record in records if record.split == split) for split in SPLITS}
    logger.info("Loaded %d records from %s (%s)", len(records), manifest_path, split_counts)
    return DatasetManifest(
        name=name or manifest_path.stem,
        records=tuple(records),
        feature_dim=feature_dim,
        split_counts=split_counts,
    )


def write_manifest(records: Sequence[DatasetRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(
        [[r.record_id, r.payload_ref, r.label, r.split] for r in records],
        columns=MANIFEST_COLUMNS,
    )
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def manifest_from_yolo_layout(root: str | Path, positive_class: int = 1) -> List[DatasetRecord]:
    """Build records from ``root/{train,valid,test}/labels/*.txt``.

    An image is labelled 1 when any of its objects has the positive class.
    The image is assumed to sit at ``<split>/images/<stem>.jpg``.
    """
    root = Path(root)
    records: List[DatasetRecord] = []
    for directory, split in YOLO_SPLIT_DIRS.items():
        label_dir = root / directory / "labels"
        if not label_dir.is_dir():
            continue
        for label_path in sorted(label_dir.glob("*.txt")):
            objects = read_yolo_label_file(label_path)
            label = int(any(derive_binary_label(obj, positive_class) for obj in objects))
            image_path = Path(directory) / "images" / f"{label_path.stem}.jpg"
            records.append(
                DatasetRecord(
                    record_id=f"{directory}/{label_path.stem}",
                    payload_ref=image_path.as_posix(),
                    label=label,
                    split=split,
                )
            )
    if not records:
        raise ArtifactNotFoundError(f"No YOLO label files found under {root}")
    return records


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def digests(paths: Sequence[Path]) -> Dict[str, str]:
    return {path.name: file_digest(path) for path in paths if path.exists()}
