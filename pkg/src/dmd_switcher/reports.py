"""Machine-readable CSV reports, with Markdown tables rendered from them."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel

from .models import CostReport, CurvePoint, DeferralCurve
from .switcher.training import TrainReport

CURVE_COLUMNS = ["fraction", "combined_f1", "deferred_count", "method"]
COST_COLUMNS = ["fraction", "total_time_s", "total_energy_kj", "energy_kwh", "reduction"]


class NamedTable(BaseModel):
    title: str
    columns: List[str]
    rows: List[List[str | float | int | None]]
    description: Optional[str] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)


def _write_csv(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def curve_frame(method: str, curve: DeferralCurve, small_only: Optional[CurvePoint] = None) -> pd.DataFrame:
    points = ([small_only] if small_only is not None else []) + list(curve.points)
    return pd.DataFrame(
        [[p.fraction, p.combined_f1, p.deferred_count, method] for p in points],
        columns=CURVE_COLUMNS,
    )


def write_curve_report(frames: Sequence[pd.DataFrame], path: str | Path) -> Path:
    return _write_csv(pd.concat(frames, ignore_index=True), path)


def cost_frame(reports: Sequence[CostReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            [r.deferred_fraction, r.total_time, r.total_energy, r.energy_kwh, r.reduction_vs_large_only]
            for r in reports
        ],
        columns=COST_COLUMNS,
    )


def write_cost_report(reports: Sequence[CostReport], path: str | Path) -> Path:
    return _write_csv(cost_frame(reports), path)


def train_frame(report: TrainReport) -> pd.DataFrame:
    df = pd.DataFrame([epoch.model_dump() for epoch in report.epochs])
    df["best"] = df["epoch"] == report.best_epoch
    return df


def write_train_report(report: TrainReport, path: str | Path) -> Path:
    return _write_csv(train_frame(report), path)


def write_table(table: NamedTable, path: str | Path) -> Path:
    return _write_csv(table.to_frame(), path)


def _format_cell(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:,.2f}" if abs(value) >= 1 else f"{value:.4f}"
    return str(value)


def render_markdown(tables: Sequence[NamedTable], notes: Dict[str, str] | None = None) -> str:
    rendered: List[str] = []
    for table in tables:
        rendered.append(f"### {table.title}")
        rendered.append(" | ".join(table.columns))
        rendered.append(" | ".join(["---"] * len(table.columns)))
        for row in table.rows:
            rendered.append(" | ".join(_format_cell(item) for item in row))
        if table.description:
            rendered.append(f"_Note: {table.description}_")
        rendered.append("")
    for title, text in (notes or {}).items():
        rendered.append(f"**{title}:** {text}")
    return "\n".join(rendered).rstrip() + "\n"
