"""HTTP client for a teacher served elsewhere (the cloud model)."""
from __future__ import annotations

import logging
import threading
import time
from typing import Any, Dict, List, Optional

import httpx
from pydantic import BaseModel, ValidationError

from ..config import RemoteTeacherParams
from ..errors import RemoteResponseError, RemoteStatusError, RemoteTimeoutError, TeacherError
from ..models import DatasetRecord, TeacherOutput
from .base import Teacher

logger = logging.getLogger(__name__)


class RequestLogEntry(BaseModel):
    record_id: str
    attempt: int
    status_code: Optional[int] = None
    outcome: str
    elapsed_s: float


class RemoteTeacher(Teacher):
    kind = "remote"

    def __init__(
        self,
        role: str,
        params: RemoteTeacherParams,
        feature_dim: Optional[int] = None,
        client: Optional[httpx.Client] = None,
    ) -> None:
        super().__init__(role, feature_dim if role == "small" else None)
        self.params = params
        self._owns_client = client is None
        self._client = client or httpx.Client(timeout=params.timeout_ms / 1000.0)
        self._slots = threading.BoundedSemaphore(params.max_in_flight)
        self._log_lock = threading.Lock()
        self.request_log: List[RequestLogEntry] = []

    @property
    def url(self) -> str:
        return self.params.endpoint_url.rstrip("/") + "/predict"

    def _record(self, entry: RequestLogEntry) -> None:
        with self._log_lock:
            self.request_log.append(entry)

    def _predict(self, record: DatasetRecord) -> TeacherOutput:
        body = {"record_id": record.record_id, "payload_ref": record.payload_ref, "want_hidden": self.wants_hidden}
        last_error: TeacherError = TeacherError(f"No attempt made for {record.record_id!r}")
        for attempt in range(self.params.max_retries + 1):
            if attempt:
                logger.warning("Retrying %s for %s (attempt %d): %s", self.url, record.record_id, attempt + 1, last_error)
            started = time.perf_counter()
            try:
                with self._slots:
                    response = self._client.post(self.url, json=body, timeout=self.params.timeout_ms / 1000.0)
            except httpx.TimeoutException as exc:
                last_error = RemoteTimeoutError(f"Remote teacher timed out after {self.params.timeout_ms} ms: {exc}")
                self._record(RequestLogEntry(record_id=record.record_id, attempt=attempt, outcome="timeout",
                                             elapsed_s=time.perf_counter() - started))
                continue
            except httpx.TransportError as exc:
                last_error = TeacherError(f"Remote teacher unreachable at {self.url}: {exc}")
                self._record(RequestLogEntry(record_id=record.record_id, attempt=attempt, outcome="transport-error",
                                             elapsed_s=time.perf_counter() - started))
                continue

            elapsed = time.perf_counter() - started
            outcome = "ok" if response.is_success else "status-error"
            self._record(RequestLogEntry(record_id=record.record_id, attempt=attempt,
                                         status_code=response.status_code, outcome=outcome, elapsed_s=elapsed))
            logger.debug("%s %s -> %d in %.1f ms", self.url, record.record_id, response.status_code, elapsed * 1000)
            if response.status_code >= 500:
                last_error = RemoteStatusError(response.status_code, response.text)
                continue
            if not response.is_success:
                raise RemoteStatusError(response.status_code, response.text)
            return self._parse(response, record)
        raise last_error

    def _parse(self, response: httpx.Response, record: DatasetRecord) -> TeacherOutput:
        try:
            payload: Dict[str, Any] = response.json()
        except ValueError as exc:
            raise RemoteResponseError(f"Remote teacher returned non-JSON body for {record.record_id!r}") from exc
        if not isinstance(payload, dict):
            raise RemoteResponseError(f"Remote teacher returned {type(payload).__name__}, expected an object")
        try:
            output = TeacherOutput(
                prediction=payload.get("prediction"),
                probability=payload.get("probability"),
                hidden=payload.get("hidden") if self.wants_hidden else None,
            )
        except ValidationError as exc:
            raise RemoteResponseError(f"Malformed remote response for {record.record_id!r}: {exc}") from exc
        if self.wants_hidden and output.hidden is None:
            raise RemoteResponseError(f"Remote response for {record.record_id!r} lacks requested hidden features")
        return output

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "endpoint_url": self.params.endpoint_url}

    def close(self) -> None:
        if self._owns_client:
            self._client.close()
