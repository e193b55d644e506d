"""Bucket calibration of the deferral threshold.

Items are sorted by ascending alignment probability (ties by record_id) and
the least-aligned ``ceil(fraction * n)`` go to the large model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Set

from .errors import DimensionMismatchError, EmptyInputError, SchemaViolationError
from .metrics import confusion, deferred_count, f1_score
from .models import CurvePoint, DeferralCurve, DeferralPolicy, ScoredItem
from .switcher.network import SwitcherModel, predict_alignment

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoringInput:
    record_id: str
    features: Sequence[float]
    small_pred: int
    large_pred: int
    true_label: int
    small_prob: Optional[float] = None


def score_items(model: SwitcherModel, inputs: Sequence[ScoringInput]) -> List[ScoredItem]:
    items: List[ScoredItem] = []
    for entry in inputs:
        if len(entry.features) != model.architecture.input_dim:
            raise DimensionMismatchError(model.architecture.input_dim, len(entry.features), entry.record_id)
        items.append(
            ScoredItem(
                record_id=entry.record_id,
                alignment_prob=predict_alignment(model, entry.features),
                small_pred=entry.small_pred,
                large_pred=entry.large_pred,
                true_label=entry.true_label,
                small_prob=entry.small_prob,
            )
        )
    return items


def alignment_order(items: Sequence[ScoredItem]) -> List[ScoredItem]:
    return sorted(items, key=lambda item: (item.alignment_prob, item.record_id))


def uncertainty(probability: float) -> float:
    return 1.0 - max(probability, 1.0 - probability)


def uncertainty_order(items: Sequence[ScoredItem]) -> List[ScoredItem]:
    """Most uncertain small-model predictions first, ties by record_id."""
    if any(item.small_prob is None for item in items):
        raise SchemaViolationError("uncertainty ranking needs the small model's probability on every item")
    return sorted(items, key=lambda item: (-uncertainty(item.small_prob), item.record_id))


def _f1_deferring_first(ordered: Sequence[ScoredItem], count: int) -> float:
    finals = [item.large_pred if position < count else item.small_pred for position, item in enumerate(ordered)]
    return f1_score(confusion(finals, [item.true_label for item in ordered]))


def combined_f1_at_fraction(items: Sequence[ScoredItem], fraction: float) -> float:
    if not items:
        raise EmptyInputError("cannot compute combined F1 of no items")
    return _f1_deferring_first(alignment_order(items), deferred_count(len(items), fraction))


def _curve(ordered: Sequence[ScoredItem], bucket_count: int) -> DeferralCurve:
    if not ordered:
        raise EmptyInputError("cannot build a curve from no items")
    n = len(ordered)
    points = []
    for k in range(1, bucket_count + 1):
        fraction = k / bucket_count
        count = deferred_count(n, fraction)
        points.append(CurvePoint(fraction=fraction, combined_f1=_f1_deferring_first(ordered, count), deferred_count=count))
    return DeferralCurve(points=points, bucket_count=bucket_count)


def build_curve(items: Sequence[ScoredItem], bucket_count: int = 10) -> DeferralCurve:
    return _curve(alignment_order(items), bucket_count)


def build_uncertainty_curve(items: Sequence[ScoredItem], bucket_count: int = 10) -> DeferralCurve:
    """Same buckets, but deferring the small model's least confident items first."""
    return _curve(uncertainty_order(items), bucket_count)


def small_only_point(items: Sequence[ScoredItem]) -> CurvePoint:
    return CurvePoint(fraction=0.0, combined_f1=_f1_deferring_first(list(items), 0), deferred_count=0)


def select_policy(curve: DeferralCurve, train_items: Sequence[ScoredItem]) -> DeferralPolicy:
    best = curve.points[0]
    for point in curve.points[1:]:
        if point.combined_f1 > best.combined_f1:
            best = point

    ordered = alignment_order(train_items)
    count = deferred_count(len(ordered), best.fraction)
    if count == 0:
        cutoff, cutoff_id = 0.0, None
    else:
        cutoff, cutoff_id = ordered[count - 1].alignment_prob, ordered[count - 1].record_id
    policy = DeferralPolicy(
        deferred_fraction=best.fraction,
        probability_cutoff=cutoff,
        cutoff_record_id=cutoff_id,
        provenance={"bucket_count": curve.bucket_count, "calibration_items": len(ordered), "peak_f1": best.combined_f1},
    )
    logger.info("Selected deferral fraction %.2f (F1 %.4f), cutoff %.6f", best.fraction, best.combined_f1, cutoff)
    return policy


def uncertainty_rank(items: Sequence[ScoredItem], fraction: float) -> Set[str]:
    ordered = uncertainty_order(items)
    return {item.record_id for item in ordered[: deferred_count(len(ordered), fraction)]}


def uncertainty_f1_at_fraction(items: Sequence[ScoredItem], fraction: float) -> float:
    if not items:
        raise EmptyInputError("cannot compute combined F1 of no items")
    deferred = uncertainty_rank(items, fraction)
    finals = [item.large_pred if item.record_id in deferred else item.small_pred for item in items]
    return f1_score(confusion(finals, [item.true_label for item in items]))
