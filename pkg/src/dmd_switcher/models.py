from __future__ import annotations

from typing import Annotated, Any, Dict, List, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, computed_field, model_validator

Split = Literal["train", "validation", "test"]
SPLITS: tuple[str, ...] = ("train", "validation", "test")


def _check_binary(value: object) -> int:
    # bools are ints in Python; a JSON `true` is not a valid label
    if isinstance(value, bool) or not isinstance(value, int) or value not in (0, 1):
        raise ValueError(f"expected 0 or 1, got {value!r}")
    return value


Binary = Annotated[int, BeforeValidator(_check_binary)]
Probability = Annotated[float, Field(ge=0.0, le=1.0)]


def prediction_for(probability: float) -> int:
    """Class decision for a class-1 probability; a tie at 0.5 resolves to 1."""
    return 1 if probability >= 0.5 else 0


class DatasetRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    record_id: str = Field(min_length=1)
    payload_ref: str
    # None only for inference-time requests that are not part of any manifest
    label: Optional[Binary] = None
    split: Split = "test"


class YoloLabelLine(BaseModel):
    model_config = ConfigDict(frozen=True)

    class_index: int = Field(ge=0)
    cx: Probability
    cy: Probability
    w: Probability
    h: Probability

    def format(self) -> str:
        return f"{self.class_index} {self.cx!r} {self.cy!r} {self.w!r} {self.h!r}"


class DatasetManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    records: tuple[DatasetRecord, ...]
    feature_dim: int = Field(default=1536, gt=0)
    split_counts: Dict[str, int]

    def records_for(self, split: str) -> List[DatasetRecord]:
        return [record for record in self.records if record.split == split]

    def lookup(self, record_id: str) -> Optional[DatasetRecord]:
        for record in self.records:
            if record.record_id == record_id:
                return record
        return None


class TeacherOutput(BaseModel):
    model_config = ConfigDict(frozen=True)

    prediction: Binary
    probability: Probability
    hidden: Optional[List[float]] = None

    @model_validator(mode="after")
    def _prediction_matches_probability(self) -> "TeacherOutput":
        if self.prediction != prediction_for(self.probability):
            raise ValueError(
                f"prediction {self.prediction} inconsistent with probability {self.probability}"
            )
        return self


class ConfusionCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class DmdRecord(BaseModel):
    """One distilled training example. Field order is the on-disk key order."""

    model_config = ConfigDict(extra="forbid", strict=True)

    image_path: str
    last_hidden_layer: List[float]
    label: Binary


class DmdDataset(BaseModel):
    split: Split
    records: List[DmdRecord] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @property
    def feature_dim(self) -> Optional[int]:
        return len(self.records[0].last_hidden_layer) if self.records else None


class DmdSummary(BaseModel):
    count: int
    agree_rate: Optional[float] = None
    mean_norm: Optional[float] = None


class ScoredItem(BaseModel):
    model_config = ConfigDict(frozen=True)

    record_id: str
    alignment_prob: Probability
    small_pred: Binary
    large_pred: Binary
    true_label: Binary
    small_prob: Optional[Probability] = None


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    fraction: float = Field(ge=0.0, le=1.0)
    combined_f1: float = Field(ge=0.0, le=1.0)
    deferred_count: int = Field(ge=0)


class DeferralCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: List[CurvePoint]
    bucket_count: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _check_shape(self) -> "DeferralCurve":
        if len(self.points) != self.bucket_count:
            raise ValueError(f"{len(self.points)} points for {self.bucket_count} buckets")
        fractions = [point.fraction for point in self.points]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValueError("curve fractions must be strictly increasing")
        if fractions[-1] != 1.0:
            raise ValueError("last curve fraction must be 1.0")
        return self


class DeferralPolicy(BaseModel):
    deferred_fraction: float = Field(ge=0.0, le=1.0)
    probability_cutoff: float = Field(ge=0.0, le=1.0)
    cutoff_record_id: Optional[str] = None
    tie_rule: Literal["record_id-ascending"] = "record_id-ascending"
    provenance: Dict[str, Any] = Field(default_factory=dict)

    def defers(self, alignment_prob: float, record_id: str) -> bool:
        """Inclusive cutoff; ties at the cutoff probability fall back to record_id order."""
        if alignment_prob != self.probability_cutoff or self.cutoff_record_id is None:
            return alignment_prob <= self.probability_cutoff
        return record_id <= self.cutoff_record_id


class RouteTrace(BaseModel):
    record_id: str
    small_prediction: Binary
    small_probability: Optional[float] = None
    alignment_prob: float
    deferred: bool
    large_prediction: Optional[Binary] = None
    final_prediction: Binary
    latency_components: Dict[str, float] = Field(default_factory=dict)
    budget_state_after: Optional[int] = None
    fallback_reason: Optional[Literal["budget_exhausted", "large_teacher_error"]] = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "RouteTrace":
        if self.deferred != (self.large_prediction is not None):
            raise ValueError("large_prediction must be present iff deferred")
        expected = self.large_prediction if self.deferred else self.small_prediction
        if self.final_prediction != expected:
            raise ValueError("final_prediction does not follow the deferral decision")
        return self


class CostReport(BaseModel):
    deferred_fraction: float = Field(ge=0.0, le=1.0)
    total_time: float = Field(ge=0.0)
    total_energy: float = Field(ge=0.0)
    reduction_vs_large_only: Optional[float] = None

    @computed_field  # type: ignore[prop-decorator]
    @property
    def energy_kwh(self) -> float:
        return self.total_energy / 3600.0
