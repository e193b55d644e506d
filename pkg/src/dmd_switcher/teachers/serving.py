"""Expose any teacher over the remote teacher wire protocol."""
from __future__ import annotations

import logging
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from ..errors import ReplayMissError, TeacherError
from ..models import DatasetManifest, DatasetRecord
from .base import Teacher

logger = logging.getLogger(__name__)


class PredictRequest(BaseModel):
    record_id: str
    payload_ref: str
    want_hidden: bool = False


class PredictResponse(BaseModel):
    prediction: int
    probability: float
    hidden: Optional[List[float]] = None


def create_teacher_app(teacher: Teacher, manifest: Optional[DatasetManifest] = None) -> FastAPI:
    """``manifest`` supplies labels for teachers that need them (synthetic)."""
    app = FastAPI(title=f"{teacher.kind} {teacher.role} teacher")

    @app.post("/predict", response_model=PredictResponse, response_model_exclude_none=True)
    def predict(request: PredictRequest) -> PredictResponse:
        record = manifest.lookup(request.record_id) if manifest is not None else None
        if record is None:
            record = DatasetRecord(record_id=request.record_id, payload_ref=request.payload_ref)
        try:
            output = teacher.predict(record)
        except ReplayMissError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except TeacherError as exc:
            logger.error("Teacher failed on %s: %s", request.record_id, exc)
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return PredictResponse(
            prediction=output.prediction,
            probability=output.probability,
            hidden=output.hidden if request.want_hidden else None,
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    return app
