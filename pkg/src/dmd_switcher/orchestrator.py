from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import httpx
import uvicorn

from .calibrate import (
    ScoringInput,
    build_curve,
    build_uncertainty_curve,
    score_items,
    select_policy,
    small_only_point,
    uncertainty_f1_at_fraction,
)
from .config import RunConfig
from .costsim import cost_curve, estimate_cost, measure_from_traces, resolve_cost_params
from .data_loader import digests, load_manifest
from .dmd import dmd_summary, generate_dmd, load_dmd_dataset, write_dmd
from .errors import ArtifactNotFoundError, DmdSwitcherError, EmptyInputError, SchemaViolationError, ServiceStartupError
from .metrics import confusion, f1_score
from .models import SPLITS, DatasetManifest, DatasetRecord, DeferralPolicy, ScoredItem
from .reports import (
    NamedTable,
    curve_frame,
    render_markdown,
    write_cost_report,
    write_curve_report,
    write_table,
    write_train_report,
)
from .router import Router
from .service import RouterService, create_app
from .switcher.network import SwitcherModel
from .switcher.storage import load_model, save_model
from .switcher.training import train
from .teachers import Teacher, build_teacher

logger = logging.getLogger(__name__)

MODEL_FILE = "switcher.bin"
POLICY_FILE = "policy.json"
PROVENANCE_FILE = "provenance.json"
# reference values reported for the real fall-detection models; not reproducible here
REFERENCE_F1 = {"small-only": 58.2, "large-only": 87.5, "uncertainty": 76.1, "switcher": 92.1}


def dmd_path(output_dir: Path, split: str) -> Path:
    return output_dir / f"dmd_{split}.json"


def _dump_json(data: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_provenance(config: RunConfig, command: str, artifacts: Sequence[Path], extra: Optional[Dict] = None) -> Path:
    """Merge this command's record into ``provenance.json``; no timestamps, so reruns match."""
    path = config.output_dir / PROVENANCE_FILE
    record: Dict[str, Any] = {}
    if path.exists():
        record = json.loads(path.read_text(encoding="utf-8"))
    record["config_hash"] = config.config_hash()
    record["seeds"] = config.seeds()
    record.setdefault("commands", {})[command] = {"artifacts": digests(list(artifacts)), **(extra or {})}
    return _dump_json(record, path)


def build_teachers(config: RunConfig, client: Optional[httpx.Client] = None) -> Tuple[Teacher, Teacher]:
    seeds = config.seeds()
    small = build_teacher(config.teachers.small, seeds.get("small", config.seed), config.feature_dim, client)
    large = build_teacher(config.teachers.large, seeds.get("large", config.seed), config.feature_dim, client)
    return small, large


def _load(config: RunConfig) -> DatasetManifest:
    return load_manifest(config.manifest_path, feature_dim=config.feature_dim, name=config.name)


def run_generate(config: RunConfig, client: Optional[httpx.Client] = None) -> Dict[str, Path]:
    manifest = _load(config)
    small, large = build_teachers(config, client)
    paths: Dict[str, Path] = {}
    summaries: Dict[str, Any] = {}
    provenance: Dict[str, Any] = {}
    try:
        for split in SPLITS:
            dataset = generate_dmd(manifest, split, small, large, max_workers=config.max_workers)
            paths[split] = write_dmd(dataset, dmd_path(config.output_dir, split))
            summaries[split] = dmd_summary(dataset).model_dump()
            provenance[split] = dataset.provenance
            logger.info("Wrote %s (%d records)", paths[split], len(dataset.records))
    finally:
        small.close()
        large.close()
    summary_path = _dump_json(summaries, config.output_dir / "dmd_summary.json")
    write_provenance(config, "generate", [*paths.values(), summary_path], {"teachers": provenance})
    return paths


def run_train(config: RunConfig) -> Tuple[Path, Path]:
    train_set = load_dmd_dataset(dmd_path(config.output_dir, "train"), "train", config.feature_dim)
    val_set = load_dmd_dataset(dmd_path(config.output_dir, "validation"), "validation", config.feature_dim)
    seed = config.seeds()["train"]
    model, report = train(train_set, val_set, config.train, config.architecture, seed=seed)
    model_path = save_model(model, config.output_dir / MODEL_FILE)
    report.model_path = str(model_path)
    report_path = write_train_report(report, config.output_dir / "train_report.csv")
    summary_path = _dump_json(
        {
            "best_epoch": report.best_epoch,
            "epochs_run": report.epochs_run,
            "stopped_early": report.stopped_early,
            "best": report.best.model_dump(),
            "seed": report.seed,
        },
        config.output_dir / "train_summary.json",
    )
    logger.info("Best epoch %d of %d: val F1 %.4f", report.best_epoch, report.epochs_run, report.best.val_f1)
    write_provenance(config, "train", [model_path, report_path, summary_path])
    return model_path, report_path


def scoring_inputs(
    records: Sequence[DatasetRecord], small: Teacher, large: Teacher, max_workers: int = 1
) -> List[ScoringInput]:
    small_outputs = small.predict_batch(records, max_workers=max_workers)
    large_outputs = large.predict_batch(records, max_workers=max_workers)
    return [
        ScoringInput(
            record_id=record.record_id,
            features=s.hidden or [],
            small_pred=s.prediction,
            large_pred=l.prediction,
            true_label=record.label,
            small_prob=s.probability,
        )
        for record, s, l in zip(records, small_outputs, large_outputs)
    ]


def _score_split(
    config: RunConfig, model: SwitcherModel, manifest: DatasetManifest, split: str, client: Optional[httpx.Client]
) -> Tuple[List[DatasetRecord], List[ScoredItem]]:
    records = manifest.records_for(split)
    if not records:
        raise EmptyInputError(f"Split {split!r} has no records")
    small, large = build_teachers(config, client)
    try:
        return records, score_items(model, scoring_inputs(records, small, large, config.max_workers))
    finally:
        small.close()
        large.close()


def load_policy(path: Path) -> DeferralPolicy:
    if not path.exists():
        raise ArtifactNotFoundError(f"Policy file not found: {path}")
    try:
        return DeferralPolicy.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise SchemaViolationError(f"Policy file {path} is invalid: {exc}") from exc


def run_calibrate(config: RunConfig, client: Optional[httpx.Client] = None) -> Tuple[Path, Path]:
    model = load_model(config.output_dir / MODEL_FILE)
    _, items = _score_split(config, model, _load(config), "train", client)
    curve = build_curve(items, config.bucket_count)
    policy = select_policy(curve, items)
    baseline = build_uncertainty_curve(items, config.bucket_count)
    zero = small_only_point(items)
    curve_path = write_curve_report(
        [curve_frame("switcher", curve, zero), curve_frame("uncertainty", baseline, zero)],
        config.output_dir / "calibration_curve.csv",
    )
    policy_path = _dump_json(policy.model_dump(mode="json"), config.output_dir / POLICY_FILE)
    write_provenance(config, "calibrate", [policy_path, curve_path])
    return policy_path, curve_path


def run_evaluate(config: RunConfig, client: Optional[httpx.Client] = None) -> NamedTable:
    model = load_model(config.output_dir / MODEL_FILE)
    policy = load_policy(config.output_dir / POLICY_FILE)
    records, items = _score_split(config, model, _load(config), "test", client)
    labels = [item.true_label for item in items]
    fraction = policy.deferred_fraction

    small, large = build_teachers(config, client)
    try:
        _, traces, summary = Router(small, model, policy, large, config.budget).route_batch(records)
    finally:
        small.close()
        large.close()

    params = resolve_cost_params(config.cost_preset).scaled_to(len(records))
    rows: List[Tuple[str, float, float]] = [
        ("small-only", f1_score(confusion([i.small_pred for i in items], labels)), 0.0),
        ("large-only", f1_score(confusion([i.large_pred for i in items], labels)), 1.0),
        ("uncertainty", uncertainty_f1_at_fraction(items, fraction), fraction),
        ("switcher", summary.f1 or 0.0, summary.deferred_fraction),
    ]
    table = NamedTable(
        title="Approach comparison (test split)",
        columns=["approach", "f1_pct", "large_model_pct", "time_s", "energy_kj", "reference_f1_pct"],
        rows=[],
        description="Time and energy are modeled with the additive cost model.",
    )
    for approach, f1, share in rows:
        cost = estimate_cost(params, share)
        table.rows.append([approach, 100.0 * f1, 100.0 * share, cost.total_time, cost.total_energy, REFERENCE_F1[approach]])

    measured = measure_from_traces(traces, params)
    logger.info(
        "Measured routing: %.1f%% deferred, %.3f s wall time, %.3f kJ charged",
        100 * measured.deferred_fraction, measured.total_time, measured.total_energy,
    )

    zero = small_only_point(items)
    test_curve_path = write_curve_report(
        [
            curve_frame("switcher", build_curve(items, config.bucket_count), zero),
            curve_frame("uncertainty", build_uncertainty_curve(items, config.bucket_count), zero),
        ],
        config.output_dir / "test_curves.csv",
    )
    table_path = write_table(table, config.output_dir / "evaluation.csv")
    markdown_path = config.output_dir / "evaluation.md"
    markdown_path.write_text(
        render_markdown(
            [table],
            {"Reference": "reference_f1_pct holds the F1 reported for the real fall-detection models; "
                          "it is documentation, not a target this run can reproduce."},
        ),
        encoding="utf-8",
    )
    write_provenance(config, "evaluate", [table_path, markdown_path, test_curve_path])
    return table


def run_cost(config: RunConfig) -> Path:
    params = resolve_cost_params(config.cost_preset)
    path = write_cost_report(cost_curve(params, config.bucket_count), config.output_dir / "cost_curve.csv")
    write_provenance(config, "cost", [path])
    return path


def load_router_service(config: RunConfig, client: Optional[httpx.Client] = None) -> RouterService:
    model_path = config.service.model_path or config.output_dir / MODEL_FILE
    policy_path = config.service.policy_path or config.output_dir / POLICY_FILE
    try:
        model = load_model(model_path)
        policy = load_policy(policy_path)
        manifest = _load(config) if config.manifest_path.exists() else None
        small, large = build_teachers(config, client)
    except DmdSwitcherError as exc:
        raise ServiceStartupError(f"Cannot start router service: {exc}") from exc
    trace_log = config.service.trace_log or config.output_dir / "traces.jsonl"
    router = Router(small, model, policy, large, config.budget)
    return RouterService(router, trace_log=trace_log, manifest=manifest)


def serve(config: RunConfig) -> None:
    service = load_router_service(config)
    logger.info("Serving router on %s:%d", config.service.host, config.service.port)
    uvicorn.run(create_app(service), host=config.service.host, port=config.service.port)


def serve_teacher(config: RunConfig, role: str, host: str, port: int) -> None:
    from .teachers.serving import create_teacher_app

    small, large = build_teachers(config)
    teacher = small if role == "small" else large
    manifest = _load(config) if config.manifest_path.exists() else None
    logger.info("Serving %s teacher on %s:%d", role, host, port)
    uvicorn.run(create_teacher_app(teacher, manifest), host=host, port=port)
