"""Exception hierarchy. Each family carries the CLI exit code it maps to."""
from __future__ import annotations

from typing import List, Tuple


class DmdSwitcherError(Exception):
    exit_code: int = 3


class UsageError(DmdSwitcherError):
    exit_code = 1


class ConfigError(UsageError):
    pass


class DataError(DmdSwitcherError):
    exit_code = 2


class SchemaViolationError(DataError):
    pass


class MalformedLineError(DataError):
    def __init__(self, line: str, reason: str) -> None:
        super().__init__(f"Malformed line {line!r}: {reason}")
        self.line = line


class GeometryRangeError(DataError):
    pass


class DuplicateRecordError(DataError):
    def __init__(self, record_id: str) -> None:
        super().__init__(f"Duplicate record_id {record_id!r}")
        self.record_id = record_id


class UnknownSplitError(DataError):
    pass


class NonBinaryLabelError(DataError):
    pass


class DimensionMismatchError(DataError):
    def __init__(self, expected: int, actual: int, context: str = "") -> None:
        where = f" ({context})" if context else ""
        super().__init__(f"Expected dimension {expected}, got {actual}{where}")
        self.expected = expected
        self.actual = actual


class ArtifactNotFoundError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class MissingLatencyError(DataError):
    pass


class PipelineRuntimeError(DmdSwitcherError):
    exit_code = 3


class TeacherError(PipelineRuntimeError):
    pass


class ReplayMissError(TeacherError):
    def __init__(self, record_id: str) -> None:
        super().__init__(f"Record {record_id!r} is absent from the replay fixture")
        self.record_id = record_id


class RemoteTimeoutError(TeacherError):
    pass


class RemoteStatusError(TeacherError):
    def __init__(self, status_code: int, body: str) -> None:
        super().__init__(f"Remote teacher answered HTTP {status_code}: {body[:200]}")
        self.status_code = status_code


class RemoteResponseError(TeacherError):
    pass


class TeacherBatchError(TeacherError):
    def __init__(self, failures: List[Tuple[str, Exception]]) -> None:
        listed = "; ".join(f"{record_id}: {exc}" for record_id, exc in failures[:5])
        more = f" (+{len(failures) - 5} more)" if len(failures) > 5 else ""
        super().__init__(f"{len(failures)} record(s) failed: {listed}{more}")
        self.failures = failures


class NonFiniteLossError(PipelineRuntimeError):
    def __init__(self, epoch: int, batch: int) -> None:
        super().__init__(f"Non-finite training loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class BudgetExhaustedError(PipelineRuntimeError):
    pass


class ServiceStartupError(PipelineRuntimeError):
    pass
