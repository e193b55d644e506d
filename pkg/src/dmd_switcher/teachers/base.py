from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..errors import DimensionMismatchError, TeacherBatchError, TeacherError
from ..models import DatasetRecord, TeacherOutput

logger = logging.getLogger(__name__)


class Teacher(ABC):
    """Oracle for the small (edge) or large (cloud) model.

    Implementations are immutable after construction and safe to call from
    several threads at once.
    """

    kind: str = "abstract"

    def __init__(self, role: str, feature_dim: Optional[int] = None) -> None:
        self.role = role
        self.feature_dim = feature_dim

    @property
    def wants_hidden(self) -> bool:
        return self.role == "small"

    @abstractmethod
    def _predict(self, record: DatasetRecord) -> TeacherOutput:
        ...

    def predict(self, record: DatasetRecord) -> TeacherOutput:
        return self._checked(self._predict(record), record)

    def _checked(self, output: TeacherOutput, record: DatasetRecord) -> TeacherOutput:
        if not self.wants_hidden:
            return output
        if output.hidden is None:
            raise TeacherError(f"Small teacher returned no hidden features for {record.record_id!r}")
        if self.feature_dim is not None and len(output.hidden) != self.feature_dim:
            raise DimensionMismatchError(self.feature_dim, len(output.hidden), f"record {record.record_id!r}")
        return output

    def predict_batch(self, records: Sequence[DatasetRecord], max_workers: int = 1) -> List[TeacherOutput]:
        """Predict every record, preserving input order whatever the parallelism."""
        if not records:
            return []

        def attempt(record: DatasetRecord) -> Tuple[Optional[TeacherOutput], Optional[Exception]]:
            try:
                return self.predict(record), None
            except (TeacherError, DimensionMismatchError) as exc:
                return None, exc

        if max_workers <= 1:
            results = [attempt(record) for record in records]
        else:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                results = list(pool.map(attempt, records))

        failures = [(record.record_id, exc) for record, (_, exc) in zip(records, results) if exc is not None]
        if failures:
            if len(failures) == 1:
                raise failures[0][1]
            raise TeacherBatchError(failures)
        return [output for output, _ in results]

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "role": self.role, "feature_dim": self.feature_dim}

    def close(self) -> None:
        pass
