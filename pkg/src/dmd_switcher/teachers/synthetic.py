from __future__ import annotations

from typing import Any, Dict

import numpy as np

from ..config import SyntheticTeacherParams
from ..errors import TeacherError
from ..models import DatasetRecord, TeacherOutput
from ..rng import SplitMix64
from .base import Teacher


class SyntheticTeacher(Teacher):
    """Stochastic stand-in for a real model with configurable per-class accuracy.

    All randomness for a record comes from hash(seed, record_id), so outputs do
    not depend on call order or batching.
    """

    kind = "synthetic"

    def __init__(self, role: str, params: SyntheticTeacherParams, seed: int) -> None:
        super().__init__(role, params.feature_dim if role == "small" else None)
        self.params = params
        self.seed = seed
        signs = SplitMix64.for_key(seed, "feature-direction").uniform(params.feature_dim)
        self._direction = np.where(signs < 0.5, -1.0, 1.0)

    def _predict(self, record: DatasetRecord) -> TeacherOutput:
        if record.label is None:
            raise TeacherError(f"Synthetic teacher needs a labelled record; {record.record_id!r} has none")
        rng = SplitMix64.for_key(self.seed, record.record_id)
        accuracy = self.params.accuracy_positive if record.label == 1 else self.params.accuracy_negative
        correct = rng.random() < accuracy
        prediction = record.label if correct else 1 - record.label

        margin = 0.5 * (1.0 - rng.random())  # (0, 0.5]
        if not correct:
            margin *= self.params.wrong_confidence_scale
        probability = 0.5 + margin if prediction == 1 else 0.5 - margin

        hidden = None
        if self.wants_hidden:
            hidden = self._features(rng, label=record.label, correct=correct).tolist()
        return TeacherOutput(prediction=prediction, probability=probability, hidden=hidden)

    def _features(self, rng: SplitMix64, label: int, correct: bool) -> np.ndarray:
        if self.params.feature_model == "class-conditioned-gaussian":
            sign = 1.0 if label == 1 else -1.0
        else:
            sign = 1.0 if correct else -1.0
        return sign * self._direction + self.params.noise_scale * rng.normal(self.params.feature_dim)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "seed": self.seed, "params": self.params.model_dump(mode="json")}
