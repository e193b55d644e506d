from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .costsim import CostParams
from .errors import ConfigError
from .rng import RngSeed, derive_seed

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    level = (level or os.getenv("DMD_SWITCHER_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticTeacherParams(_Section):
    accuracy_positive: float = Field(default=0.8, ge=0.0, le=1.0)
    accuracy_negative: float = Field(default=0.8, ge=0.0, le=1.0)
    feature_dim: int = Field(default=1536, gt=0)
    feature_model: Literal["class-conditioned-gaussian", "correctness-conditioned-gaussian"] = (
        "correctness-conditioned-gaussian"
    )
    noise_scale: float = Field(default=1.0, gt=0.0)
    # shrinks the confidence margin of wrong predictions; 1.0 leaves it uninformative
    wrong_confidence_scale: float = Field(default=1.0, gt=0.0, le=1.0)
    seed: Optional[RngSeed] = None


class ReplayTeacherParams(_Section):
    fixture_path: Path


class RemoteTeacherParams(_Section):
    endpoint_url: str
    timeout_ms: int = Field(default=5000, gt=0)
    max_retries: int = Field(default=2, ge=0)
    max_in_flight: int = Field(default=8, gt=0)


_PARAMS_BY_KIND = {
    "synthetic": SyntheticTeacherParams,
    "replay": ReplayTeacherParams,
    "remote": RemoteTeacherParams,
}


class TeacherSpec(_Section):
    kind: Literal["synthetic", "replay", "remote"]
    role: Literal["small", "large"]
    params: Union[SyntheticTeacherParams, ReplayTeacherParams, RemoteTeacherParams]

    @model_validator(mode="before")
    @classmethod
    def _params_for_kind(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("kind") in _PARAMS_BY_KIND:
            params = data.get("params") or {}
            if isinstance(params, dict):
                data = {**data, "params": _PARAMS_BY_KIND[data["kind"]](**params)}
        return data


class TeachersConfig(_Section):
    small: TeacherSpec
    large: TeacherSpec

    @model_validator(mode="after")
    def _check_roles(self) -> "TeachersConfig":
        if self.small.role != "small" or self.large.role != "large":
            raise ValueError("teachers.small must have role 'small' and teachers.large role 'large'")
        return self


class MlpArchitecture(_Section):
    input_dim: int = Field(default=1536, gt=0)
    hidden_dims: List[int] = Field(default_factory=lambda: [512, 128])
    output_dim: Literal[1] = 1

    @field_validator("hidden_dims")
    @classmethod
    def _positive(cls, value: List[int]) -> List[int]:
        if any(dim <= 0 for dim in value):
            raise ValueError("hidden dimensions must be positive")
        return value

    @property
    def layer_dims(self) -> List[int]:
        return [self.input_dim, *self.hidden_dims, self.output_dim]


class TrainConfig(_Section):
    learning_rate: float = Field(default=1e-4, gt=0.0)
    dropout_rate: float = Field(default=0.3, ge=0.0, lt=1.0)
    max_epochs: int = Field(default=100, gt=0)
    batch_size: int = Field(default=32, gt=0)
    optimizer: Literal["sgd", "adaptive-moments"] = "adaptive-moments"
    early_stop_patience: int = Field(default=10, gt=0)
    seed: Optional[RngSeed] = None


class BudgetConfig(_Section):
    max_deferral_fraction: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    max_deferrals: Optional[int] = Field(default=None, ge=0)
    window_size: int = Field(default=100, gt=0)
    exhaustion_behavior: Literal["fallback-to-small", "reject"] = "fallback-to-small"

    @model_validator(mode="after")
    def _one_bound(self) -> "BudgetConfig":
        if self.max_deferral_fraction is not None and self.max_deferrals is not None:
            raise ValueError("set max_deferral_fraction or max_deferrals, not both")
        return self

    @property
    def limit(self) -> Optional[int]:
        """Deferrals allowed per window, or None when unlimited."""
        if self.max_deferrals is not None:
            return min(self.max_deferrals, self.window_size)
        if self.max_deferral_fraction is not None:
            return math.floor(round(self.max_deferral_fraction * self.window_size, 9))
        return None


class ServiceConfig(_Section):
    host: str = "127.0.0.1"
    port: int = Field(default=8080, gt=0, lt=65536)
    trace_log: Optional[Path] = None
    model_path: Optional[Path] = None
    policy_path: Optional[Path] = None


class RunConfig(_Section):
    name: str = "dmd-run"
    manifest_path: Path
    feature_dim: int = Field(default=1536, gt=0)
    positive_class: int = Field(default=1, ge=0)
    teachers: TeachersConfig
    architecture: Optional[MlpArchitecture] = None
    train: TrainConfig = Field(default_factory=TrainConfig)
    bucket_count: int = Field(default=10, ge=1)
    budget: BudgetConfig = Field(default_factory=BudgetConfig)
    cost_preset: Union[str, CostParams] = "paper-table1"
    service: ServiceConfig = Field(default_factory=ServiceConfig)
    output_dir: Path = Path("runs/default")
    seed: RngSeed = 0
    max_workers: int = Field(default=4, gt=0)

    @model_validator(mode="after")
    def _check_dimensions(self) -> "RunConfig":
        if self.architecture is None:
            self.architecture = MlpArchitecture(input_dim=self.feature_dim)
        if self.architecture.input_dim != self.feature_dim:
            raise ValueError(
                f"architecture.input_dim {self.architecture.input_dim} != feature_dim {self.feature_dim}"
            )
        small = self.teachers.small.params
        if isinstance(small, SyntheticTeacherParams) and small.feature_dim != self.feature_dim:
            raise ValueError(f"small teacher feature_dim {small.feature_dim} != feature_dim {self.feature_dim}")
        return self

    def component_seed(self, component: str, explicit: Optional[int] = None) -> int:
        return explicit if explicit is not None else derive_seed(self.seed, component)

    def seeds(self) -> Dict[str, int]:
        seeds = {"master": self.seed, "train": self.component_seed("train", self.train.seed)}
        for role in ("small", "large"):
            params = getattr(self.teachers, role).params
            if isinstance(params, SyntheticTeacherParams):
                seeds[role] = self.component_seed(role, params.seed)
        return seeds

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path: str | Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"Config {path} must be a mapping")
    raw.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return RunConfig(**raw)
    except ValidationError as exc:
        raise ConfigError(f"Invalid config {path}:\n{exc}") from exc
