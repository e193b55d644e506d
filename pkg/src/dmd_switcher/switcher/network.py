"""NumPy multilayer perceptron mapping hidden features to an alignment logit.

Hidden layers are affine + ReLU (with optional inverted dropout); the output
layer is affine only. The sigmoid lives in the loss and in
``predict_alignment``.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from ..config import MlpArchitecture
from ..errors import DimensionMismatchError
from ..rng import SplitMix64

Mode = Literal["train", "eval"]
Gradients = List[Tuple[np.ndarray, np.ndarray]]

_P_MIN = np.finfo(np.float64).tiny
_P_MAX = np.nextafter(1.0, 0.0)


@dataclass
class SwitcherModel:
    architecture: MlpArchitecture
    weights: List[np.ndarray]  # (out_dim, in_dim) per layer
    biases: List[np.ndarray]
    activation: Literal["relu"] = "relu"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        dims = self.architecture.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError(f"expected {len(dims) - 1} layers")
        for index, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
            if self.weights[index].shape != (fan_out, fan_in) or self.biases[index].shape != (fan_out,):
                raise ValueError(f"layer {index} shape mismatch")

    @property
    def layer_count(self) -> int:
        return len(self.weights)

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def is_finite(self) -> bool:
        return all(np.isfinite(w).all() and np.isfinite(b).all() for w, b in zip(self.weights, self.biases))

    def copy(self) -> "SwitcherModel":
        return copy.deepcopy(self)

    def same_parameters(self, other: "SwitcherModel") -> bool:
        return all(
            np.array_equal(a, b) for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


@dataclass
class ForwardCache:
    layer_inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    masks: Optional[Sequence[np.ndarray]] = None


def init_model(arch: MlpArchitecture, seed: int) -> SwitcherModel:
    """Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases."""
    rng = SplitMix64(seed)
    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []
    dims = arch.layer_dims
    for fan_in, fan_out in zip(dims, dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append((rng.uniform((fan_out, fan_in)) * 2.0 - 1.0) * bound)
        biases.append(np.zeros(fan_out))
    return SwitcherModel(architecture=arch, weights=weights, biases=biases, seed=seed)


def sample_masks(model: SwitcherModel, batch_size: int, rate: float, rng: SplitMix64) -> List[np.ndarray]:
    """Inverted-dropout masks for every hidden layer: kept units are scaled by 1/(1-rate)."""
    keep = 1.0 - rate
    return [
        (rng.uniform((batch_size, dim)) >= rate).astype(np.float64) / keep
        for dim in model.architecture.hidden_dims
    ]


def _as_batch(model: SwitcherModel, features: np.ndarray) -> np.ndarray:
    batch = np.asarray(features, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.shape[1] != model.architecture.input_dim:
        raise DimensionMismatchError(model.architecture.input_dim, batch.shape[1], "switcher input")
    return batch


def forward_cached(
    model: SwitcherModel, features: np.ndarray, masks: Optional[Sequence[np.ndarray]] = None
) -> Tuple[np.ndarray, ForwardCache]:
    activations = _as_batch(model, features)
    cache = ForwardCache(masks=masks)
    last = model.layer_count - 1
    for index, (weight, bias) in enumerate(zip(model.weights, model.biases)):
        cache.layer_inputs.append(activations)
        z = activations @ weight.T + bias
        cache.pre_activations.append(z)
        if index == last:
            return z[:, 0], cache
        activations = np.maximum(z, 0.0)
        if masks is not None:
            activations = activations * masks[index]
    raise AssertionError("unreachable")


def forward_batch(
    model: SwitcherModel,
    features: np.ndarray,
    mode: Mode = "eval",
    dropout_rate: float = 0.0,
    rng: Optional[SplitMix64] = None,
) -> np.ndarray:
    masks = None
    if mode == "train" and dropout_rate > 0.0:
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        masks = sample_masks(model, _as_batch(model, features).shape[0], dropout_rate, rng)
    logits, _ = forward_cached(model, features, masks)
    return logits


def forward(
    model: SwitcherModel,
    features: Sequence[float],
    mode: Mode = "eval",
    dropout_rate: float = 0.0,
    rng: Optional[SplitMix64] = None,
) -> float:
    vector = np.asarray(features, dtype=np.float64)
    if vector.ndim != 1:
        raise ValueError("forward takes a single feature vector; use forward_batch")
    return float(forward_batch(model, vector, mode, dropout_rate, rng)[0])


def hidden_activations(
    model: SwitcherModel, features: np.ndarray, masks: Optional[Sequence[np.ndarray]] = None
) -> List[np.ndarray]:
    """Post-activation (and post-dropout) outputs of every hidden layer."""
    _, cache = forward_cached(model, features, masks)
    return cache.layer_inputs[1:]


def sigmoid(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    exp_neg_abs = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + exp_neg_abs), exp_neg_abs / (1.0 + exp_neg_abs))


def predict_alignment_batch(model: SwitcherModel, features: np.ndarray) -> np.ndarray:
    return np.clip(sigmoid(forward_batch(model, features, "eval")), _P_MIN, _P_MAX)


def predict_alignment(model: SwitcherModel, features: Sequence[float]) -> float:
    """Probability that the large model agrees with the small one; strictly in (0, 1)."""
    vector = np.asarray(features, dtype=np.float64)
    return float(predict_alignment_batch(model, vector[None, :] if vector.ndim == 1 else vector)[0])


def bce_with_logits_loss(logits: Sequence[float], labels: Sequence[float]) -> float:
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if z.shape != y.shape:
        raise DimensionMismatchError(z.size, y.size, "logits vs labels")
    if z.size == 0:
        raise ValueError("loss of an empty batch is undefined")
    return float(np.mean(np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0) - z * y))


def loss_and_gradients(
    model: SwitcherModel,
    features: np.ndarray,
    labels: np.ndarray,
    masks: Optional[Sequence[np.ndarray]] = None,
) -> Tuple[float, Gradients]:
    logits, cache = forward_cached(model, features, masks)
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != logits.shape:
        raise DimensionMismatchError(logits.size, y.size, "batch labels")
    loss = bce_with_logits_loss(logits, y)

    # d(mean BCE)/dz = (sigmoid(z) - y) / n
    delta = ((sigmoid(logits) - y) / y.size)[:, None]
    grads: Gradients = []
    for index in range(model.layer_count - 1, -1, -1):
        layer_input = cache.layer_inputs[index]
        grads.append((delta.T @ layer_input, delta.sum(axis=0)))
        if index == 0:
            break
        upstream = delta @ model.weights[index]
        if masks is not None:
            upstream = upstream * masks[index - 1]
        delta = upstream * (cache.pre_activations[index - 1] > 0.0)
    grads.reverse()
    return loss, grads


def backward(
    model: SwitcherModel,
    features: np.ndarray,
    labels: np.ndarray,
    masks: Optional[Sequence[np.ndarray]] = None,
) -> Gradients:
    """Exact gradients of the mean BCE-with-logits loss, per layer as (dW, db)."""
    return loss_and_gradients(model, features, labels, masks)[1]


def gradient_check(model: SwitcherModel, features: np.ndarray, labels: np.ndarray, eps: float = 1e-5) -> float:
    """Largest relative error between analytic and central-difference partials (dropout off)."""
    analytic = backward(model, features, labels)
    perturbed = model.copy()

    def loss() -> float:
        return bce_with_logits_loss(forward_batch(perturbed, features), labels)

    worst = 0.0
    for layer in range(perturbed.layer_count):
        for tensor, grad in ((perturbed.weights[layer], analytic[layer][0]), (perturbed.biases[layer], analytic[layer][1])):
            for index in np.ndindex(tensor.shape):
                original = tensor[index]
                tensor[index] = original + eps
                plus = loss()
                tensor[index] = original - eps
                minus = loss()
                tensor[index] = original
                numeric = (plus - minus) / (2.0 * eps)
                denominator = max(abs(grad[index]) + abs(numeric), 1e-6)
                worst = max(worst, abs(grad[index] - numeric) / denominator)
    return worst
