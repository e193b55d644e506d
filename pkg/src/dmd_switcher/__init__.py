"""Dual-model distillation switcher package."""

from . import calibrate, costsim, data_loader, dmd, metrics

__all__ = ["calibrate", "costsim", "data_loader", "dmd", "metrics"]
