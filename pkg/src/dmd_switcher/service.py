"""HTTP routing service: ``POST /classify``, ``GET /status``, ``GET /health``."""
from __future__ import annotations

import logging
import threading
from pathlib import Path
from typing import Any, Dict, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import BudgetExhaustedError, DataError, DmdSwitcherError, TeacherError
from .models import DatasetManifest, DatasetRecord, RouteTrace
from .router import Router

logger = logging.getLogger(__name__)


class ClassifyRequest(BaseModel):
    record_id: str = Field(min_length=1)
    payload_ref: str


class ClassifyResponse(BaseModel):
    prediction: int
    deferred: bool
    alignment_prob: float


def response_from_trace(trace: RouteTrace) -> ClassifyResponse:
    return ClassifyResponse(
        prediction=trace.final_prediction, deferred=trace.deferred, alignment_prob=trace.alignment_prob
    )


class TraceLog:
    """Append-only newline-delimited RouteTrace log."""

    def __init__(self, path: Optional[Path]) -> None:
        self.path = path
        self._lock = threading.Lock()
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, trace: RouteTrace) -> None:
        if self.path is None:
            return
        line = trace.model_dump_json() + "\n"
        with self._lock, open(self.path, "a", encoding="utf-8") as f:
            f.write(line)


class RouterService:
    def __init__(self, router: Router, trace_log: Optional[Path] = None, manifest: Optional[DatasetManifest] = None):
        self.router = router
        self.trace_log = TraceLog(trace_log)
        self._records = {record.record_id: record for record in manifest.records} if manifest else {}
        self._lock = threading.Lock()
        self._counters = {"requests": 0, "deferred": 0, "fallbacks": 0, "errors": 0}

    def _count(self, **increments: int) -> None:
        with self._lock:
            for key, value in increments.items():
                self._counters[key] += value

    def resolve(self, request: ClassifyRequest) -> DatasetRecord:
        known = self._records.get(request.record_id)
        if known is not None:
            return known
        return DatasetRecord(record_id=request.record_id, payload_ref=request.payload_ref)

    def classify(self, request: ClassifyRequest) -> ClassifyResponse:
        self._count(requests=1)
        try:
            _, trace = self.router.route_one(self.resolve(request))
        except DmdSwitcherError:
            self._count(errors=1)
            raise
        self._count(deferred=int(trace.deferred), fallbacks=int(trace.fallback_reason is not None))
        self.trace_log.append(trace)
        return response_from_trace(trace)

    def status(self) -> Dict[str, Any]:
        with self._lock:
            counters = dict(self._counters)
        routed = counters["requests"] - counters["errors"]
        counters["deferral_rate"] = counters["deferred"] / routed if routed else 0.0
        counters["budget"] = self.router.budget.state()
        counters["policy"] = {
            "deferred_fraction": self.router.policy.deferred_fraction,
            "probability_cutoff": self.router.policy.probability_cutoff,
        }
        return counters


def _error(status_code: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": kind, "detail": message})


def create_app(service: RouterService) -> FastAPI:
    app = FastAPI(title="dmd-switcher router")

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        logger.error("Malformed request to %s: %s", request.url.path, exc.errors())
        return _error(400, "malformed_request", str(exc.errors()))

    @app.post("/classify", response_model=ClassifyResponse)
    def classify(request: ClassifyRequest):
        try:
            return service.classify(request)
        except BudgetExhaustedError as exc:
            return _error(429, "budget_exhausted", str(exc))
        except TeacherError as exc:
            logger.error("Routing %s failed: %s", request.record_id, exc)
            return _error(502, "teacher_error", str(exc))
        except DataError as exc:
            return _error(400, "data_error", str(exc))
        except DmdSwitcherError as exc:
            logger.error("Routing %s failed: %s", request.record_id, exc)
            return _error(500, "routing_error", str(exc))

    @app.get("/status")
    def status() -> Dict[str, Any]:
        return service.status()

    @app.get("/health")
    def health() -> Dict[str, str]:
        return {"status": "ok"}

    return app
