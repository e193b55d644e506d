from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..config import MlpArchitecture, TrainConfig
from ..dmd import check_widths
from ..errors import DimensionMismatchError, EmptyInputError, NonFiniteLossError
from ..metrics import accuracy, confusion, f1_score
from ..models import DmdDataset
from ..rng import SplitMix64, derive_seed
from .network import (
    Gradients,
    SwitcherModel,
    bce_with_logits_loss,
    forward_batch,
    init_model,
    loss_and_gradients,
    predict_alignment_batch,
    sample_masks,
)

logger = logging.getLogger(__name__)

VALIDATION_THRESHOLD = 0.5


class EpochMetrics(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    val_f1: float
    val_accuracy: float


class TrainReport(BaseModel):
    epochs_run: int
    epochs: List[EpochMetrics] = Field(default_factory=list)
    best_epoch: int
    stopped_early: bool = False
    seed: int
    model_path: Optional[str] = None

    @property
    def best(self) -> EpochMetrics:
        return self.epochs[self.best_epoch - 1]


class SgdOptimizer:
    def __init__(self, learning_rate: float) -> None:
        self.learning_rate = learning_rate

    def step(self, model: SwitcherModel, grads: Gradients) -> None:
        for layer, (d_weight, d_bias) in enumerate(grads):
            model.weights[layer] -= self.learning_rate * d_weight
            model.biases[layer] -= self.learning_rate * d_bias


class AdamOptimizer:
    """Adaptive moment estimation with the usual 0.9 / 0.999 / 1e-8 constants."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._t = 0
        self._m: List[np.ndarray] = []
        self._v: List[np.ndarray] = []

    def step(self, model: SwitcherModel, grads: Gradients) -> None:
        flat_grads = [g for pair in grads for g in pair]
        params = [p for pair in zip(model.weights, model.biases) for p in pair]
        if not self._m:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        correction1 = 1.0 - self.beta1**self._t
        correction2 = 1.0 - self.beta2**self._t
        for param, grad, m, v in zip(params, flat_grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def make_optimizer(config: TrainConfig) -> SgdOptimizer | AdamOptimizer:
    if config.optimizer == "sgd":
        return SgdOptimizer(config.learning_rate)
    return AdamOptimizer(config.learning_rate)


def dataset_arrays(dataset: DmdDataset) -> Tuple[np.ndarray, np.ndarray]:
    check_widths(dataset.records, f"DMD {dataset.split} split")
    features = np.array([record.last_hidden_layer for record in dataset.records], dtype=np.float64)
    labels = np.array([record.label for record in dataset.records], dtype=np.float64)
    return features, labels


def evaluate_split(model: SwitcherModel, features: np.ndarray, labels: np.ndarray) -> Tuple[float, float, float]:
    """(loss, F1, accuracy) at the 0.5 probability threshold."""
    loss = bce_with_logits_loss(forward_batch(model, features), labels)
    predictions = (predict_alignment_batch(model, features) >= VALIDATION_THRESHOLD).astype(int)
    counts = confusion(predictions.tolist(), labels.astype(int).tolist())
    return loss, f1_score(counts), accuracy(counts)


def train(
    dmd_train: DmdDataset,
    dmd_val: DmdDataset,
    config: TrainConfig,
    architecture: Optional[MlpArchitecture] = None,
    seed: Optional[int] = None,
) -> Tuple[SwitcherModel, TrainReport]:
    """Mini-batch training with seeded shuffling and early stopping on validation F1.

    An epoch counts as an improvement when validation F1 rises, or stays equal
    while validation loss falls. The returned model is the best epoch's.
    """
    if not dmd_train.records or not dmd_val.records:
        raise EmptyInputError("training and validation DMD sets must be non-empty")
    x_train, y_train = dataset_arrays(dmd_train)
    x_val, y_val = dataset_arrays(dmd_val)
    architecture = architecture or MlpArchitecture(input_dim=x_train.shape[1])
    for name, array in (("train", x_train), ("validation", x_val)):
        if array.ndim != 2 or array.shape[1] != architecture.input_dim:
            width = array.shape[1] if array.ndim == 2 else 0
            raise DimensionMismatchError(architecture.input_dim, width, f"{name} DMD features")

    seed = seed if seed is not None else (config.seed or 0)
    model = init_model(architecture, derive_seed(seed, "init"))
    model.seed = seed
    shuffle_rng = SplitMix64.for_key(seed, "shuffle")
    dropout_rng = SplitMix64.for_key(seed, "dropout")
    optimizer = make_optimizer(config)

    n = x_train.shape[0]
    epochs: List[EpochMetrics] = []
    best_model = model.copy()
    best_key: Optional[Tuple[float, float]] = None
    best_epoch = 0
    since_best = 0
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        weighted_loss = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            masks = None
            if config.dropout_rate > 0.0:
                masks = sample_masks(model, idx.size, config.dropout_rate, dropout_rng)
            loss, grads = loss_and_gradients(model, x_train[idx], y_train[idx], masks)
            if not np.isfinite(loss):
                raise NonFiniteLossError(epoch, batch_index)
            optimizer.step(model, grads)
            weighted_loss += loss * idx.size

        val_loss, val_f1, val_accuracy = evaluate_split(model, x_val, y_val)
        epochs.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=weighted_loss / n,
                val_loss=val_loss,
                val_f1=val_f1,
                val_accuracy=val_accuracy,
            )
        )
        logger.info(
            "epoch %d: train_loss=%.6f val_loss=%.6f val_f1=%.4f val_acc=%.4f",
            epoch, weighted_loss / n, val_loss, val_f1, val_accuracy,
        )

        key = (val_f1, -val_loss)
        if best_key is None or key > best_key:
            best_key = key
            best_model = model.copy()
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.early_stop_patience:
                stopped_early = True
                logger.info("Early stop at epoch %d; best epoch %d", epoch, best_epoch)
                break

    report = TrainReport(
        epochs_run=len(epochs),
        epochs=epochs,
        best_epoch=best_epoch,
        stopped_early=stopped_early,
        seed=seed,
    )
    return best_model, report
