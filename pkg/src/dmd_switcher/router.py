"""Inference-time dispatch between the local small teacher and the remote large one."""
from __future__ import annotations

import logging
import threading
import time
from collections import deque
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from .config import BudgetConfig
from .errors import BudgetExhaustedError, DmdSwitcherError, TeacherBatchError, TeacherError
from .metrics import accuracy, confusion, f1_score
from .models import ConfusionCounts, DatasetRecord, DeferralPolicy, RouteTrace
from .switcher.network import SwitcherModel, predict_alignment
from .teachers.base import Teacher

logger = logging.getLogger(__name__)


class BudgetLimiter:
    """Sliding window over the last ``window_size`` requests.

    A deferral is granted only if the previous ``window_size - 1`` decisions
    plus this one stay within the limit, so no window of consecutive requests
    ever exceeds it. Check-and-record is atomic.
    """

    def __init__(self, config: BudgetConfig) -> None:
        self.config = config
        self.limit = config.limit
        self._recent: deque[bool] = deque(maxlen=config.window_size - 1)
        self._lock = threading.Lock()

    def reserve(self, wants_deferral: bool) -> Tuple[bool, Optional[int]]:
        """Record one request; returns (deferral granted, deferrals left for the next request)."""
        with self._lock:
            granted = wants_deferral
            if wants_deferral and self.limit is not None:
                granted = sum(self._recent) + 1 <= self.limit
            if self._recent.maxlen:
                self._recent.append(granted)
            return granted, self._remaining()

    def _remaining(self) -> Optional[int]:
        return None if self.limit is None else self.limit - sum(self._recent)

    def state(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "window_size": self.config.window_size,
                "limit": self.limit,
                "deferrals_in_window": sum(self._recent),
                "remaining": self._remaining(),
            }


class RouteSummary(BaseModel):
    count: int
    deferred: int
    deferred_fraction: float
    fallbacks: int
    confusion: Optional[ConfusionCounts] = None
    f1: Optional[float] = None
    accuracy: Optional[float] = None


class Router:
    """Small teacher always runs; the switcher and policy decide on the large one."""

    def __init__(
        self,
        small_teacher: Teacher,
        switcher: SwitcherModel,
        policy: DeferralPolicy,
        large_teacher: Teacher,
        budget: Optional[BudgetConfig] = None,
    ) -> None:
        self.small_teacher = small_teacher
        self.switcher = switcher
        self.policy = policy
        self.large_teacher = large_teacher
        self.budget_config = budget or BudgetConfig()
        self.budget = BudgetLimiter(self.budget_config)

    @property
    def rejects(self) -> bool:
        return self.budget_config.exhaustion_behavior == "reject"

    def route_one(self, record: DatasetRecord) -> Tuple[int, RouteTrace]:
        latency: Dict[str, float] = {}
        started = time.perf_counter()
        small = self.small_teacher.predict(record)
        latency["small"] = time.perf_counter() - started

        started = time.perf_counter()
        alignment = predict_alignment(self.switcher, small.hidden or [])
        latency["switcher"] = time.perf_counter() - started

        wants_deferral = self.policy.defers(alignment, record.record_id)
        granted, remaining = self.budget.reserve(wants_deferral)
        fallback_reason = None
        large_prediction = None
        if wants_deferral and not granted:
            if self.rejects:
                raise BudgetExhaustedError(f"Deferral budget exhausted at {record.record_id!r}")
            fallback_reason = "budget_exhausted"
            logger.warning("Budget exhausted; %s answered by the small teacher", record.record_id)
        if granted:
            started = time.perf_counter()
            try:
                large_prediction = self.large_teacher.predict(record).prediction
            except TeacherError as exc:
                if self.rejects:
                    raise
                fallback_reason = "large_teacher_error"
                logger.warning("Large teacher failed on %s, falling back to small: %s", record.record_id, exc)
            latency["large"] = time.perf_counter() - started

        deferred = large_prediction is not None
        final = large_prediction if deferred else small.prediction
        trace = RouteTrace(
            record_id=record.record_id,
            small_prediction=small.prediction,
            small_probability=small.probability,
            alignment_prob=alignment,
            deferred=deferred,
            large_prediction=large_prediction,
            final_prediction=final,
            latency_components=latency,
            budget_state_after=remaining,
            fallback_reason=fallback_reason,
        )
        logger.debug("routed %s: p=%.6f deferred=%s final=%d", record.record_id, alignment, deferred, final)
        return final, trace

    def route_batch(self, records: Sequence[DatasetRecord]) -> Tuple[List[int], List[RouteTrace], RouteSummary]:
        """Sequential ``route_one`` in input order; the budget makes order part of the result."""
        finals: List[int] = []
        traces: List[RouteTrace] = []
        failures: List[Tuple[str, Exception]] = []
        for record in records:
            try:
                final, trace = self.route_one(record)
            except DmdSwitcherError as exc:
                failures.append((record.record_id, exc))
                continue
            finals.append(final)
            traces.append(trace)
        if failures:
            raise TeacherBatchError(failures)
        return finals, traces, summarize(traces, records)


def summarize(traces: Sequence[RouteTrace], records: Sequence[DatasetRecord] = ()) -> RouteSummary:
    count = len(traces)
    deferred = sum(trace.deferred for trace in traces)
    summary = RouteSummary(
        count=count,
        deferred=deferred,
        deferred_fraction=deferred / count if count else 0.0,
        fallbacks=sum(trace.fallback_reason is not None for trace in traces),
    )
    labels = {record.record_id: record.label for record in records}
    if count and all(labels.get(trace.record_id) is not None for trace in traces):
        counts = confusion([t.final_prediction for t in traces], [labels[t.record_id] for t in traces])
        summary.confusion = counts
        summary.f1 = f1_score(counts)
        summary.accuracy = accuracy(counts)
    return summary


def route_one(router: Router, record: DatasetRecord) -> Tuple[int, RouteTrace]:
    return router.route_one(record)


def route_batch(router: Router, records: Sequence[DatasetRecord]) -> Tuple[List[int], List[RouteTrace], RouteSummary]:
    return router.route_batch(records)
