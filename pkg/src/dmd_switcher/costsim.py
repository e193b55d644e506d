"""Additive time/energy model of the routed system.

The small model runs on every item; the large model only on deferred items,
so cost is affine in the deferral fraction.
"""
from __future__ import annotations

from importlib import resources
from typing import Dict, List, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError, MissingLatencyError
from .models import CostReport, RouteTrace

PRESET_PACKAGE = "dmd_switcher.presets"


class CostParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    small_time_per_item: float = Field(ge=0.0, description="seconds")
    large_time_per_item: float = Field(ge=0.0, description="seconds")
    small_energy_per_item: float = Field(ge=0.0, description="kilojoules")
    large_energy_per_item: float = Field(ge=0.0, description="kilojoules")
    item_count: int = Field(gt=0)

    def scaled_to(self, item_count: int) -> "CostParams":
        return self.model_copy(update={"item_count": item_count})


def load_preset(name: str) -> CostParams:
    """Load a packaged preset such as ``paper-table1``."""
    resource = resources.files(PRESET_PACKAGE).joinpath(f"{name}.yaml")
    if not resource.is_file():
        raise ConfigError(f"Unknown cost preset {name!r}")
    raw = yaml.safe_load(resource.read_text(encoding="utf-8"))
    try:
        return CostParams(**raw["params"])
    except (KeyError, TypeError, ValidationError) as exc:
        raise ConfigError(f"Cost preset {name!r} is malformed: {exc}") from exc


def load_measured_rows(name: str) -> Dict[str, CostReport]:
    """Measured reference rows shipped with a preset, with reductions vs large-only."""
    resource = resources.files(PRESET_PACKAGE).joinpath(f"{name}.yaml")
    if not resource.is_file():
        raise ConfigError(f"Unknown cost preset {name!r}")
    measured = yaml.safe_load(resource.read_text(encoding="utf-8")).get("measured") or {}
    reference = measured.get("large-only", {}).get("total_energy", 0.0)
    return {
        row: CostReport(**values, reduction_vs_large_only=_reduction(values["total_energy"], reference))
        for row, values in measured.items()
    }


def resolve_cost_params(preset: str | CostParams) -> CostParams:
    return load_preset(preset) if isinstance(preset, str) else preset


def _large_only(params: CostParams) -> tuple[float, float]:
    return params.item_count * params.large_time_per_item, params.item_count * params.large_energy_per_item


def _reduction(total: float, reference: float) -> Optional[float]:
    return 1.0 - total / reference if reference > 0 else None


def estimate_cost(params: CostParams, fraction: float) -> CostReport:
    n = params.item_count
    total_time = n * (params.small_time_per_item + fraction * params.large_time_per_item)
    total_energy = n * (params.small_energy_per_item + fraction * params.large_energy_per_item)
    _, large_energy = _large_only(params)
    return CostReport(
        deferred_fraction=fraction,
        total_time=total_time,
        total_energy=total_energy,
        reduction_vs_large_only=_reduction(total_energy, large_energy),
    )


def cost_curve(params: CostParams, bucket_count: int = 10) -> List[CostReport]:
    return [estimate_cost(params, k / bucket_count) for k in range(bucket_count + 1)]


def measure_from_traces(traces: Sequence[RouteTrace], params: Optional[CostParams] = None) -> CostReport:
    """Empirical totals from route traces.

    Time is the sum of measured stage latencies. Energy is only known when
    ``params`` is given: the small model is charged per trace and the large
    model per deferred trace.
    """
    if not traces:
        return CostReport(deferred_fraction=0.0, total_time=0.0, total_energy=0.0)
    total_time = 0.0
    deferred = 0
    for trace in traces:
        if not trace.latency_components:
            raise MissingLatencyError(f"Trace for {trace.record_id!r} carries no latency components")
        total_time += sum(trace.latency_components.values())
        deferred += int(trace.deferred)
    n = len(traces)
    total_energy = 0.0
    reduction = None
    if params is not None:
        total_energy = n * params.small_energy_per_item + deferred * params.large_energy_per_item
        reduction = _reduction(total_energy, n * params.large_energy_per_item)
    return CostReport(
        deferred_fraction=deferred / n,
        total_time=total_time,
        total_energy=total_energy,
        reduction_vs_large_only=reduction,
    )
