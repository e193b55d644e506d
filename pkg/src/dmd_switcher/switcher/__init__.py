"""MLP switcher: alignment probability from the small model's hidden features."""

from .network import (
    SwitcherModel,
    backward,
    bce_with_logits_loss,
    forward,
    forward_batch,
    gradient_check,
    init_model,
    predict_alignment,
    predict_alignment_batch,
)
from .storage import load_model, save_model
from .training import TrainReport, train

__all__ = [
    "SwitcherModel",
    "TrainReport",
    "backward",
    "bce_with_logits_loss",
    "forward",
    "forward_batch",
    "gradient_check",
    "init_model",
    "load_model",
    "predict_alignment",
    "predict_alignment_batch",
    "save_model",
    "train",
]
