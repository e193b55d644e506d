import json
from pathlib import Path

import numpy as np

from conftest import write_pipeline_config
from dmd_switcher import calibrate, orchestrator
from dmd_switcher.config import MlpArchitecture, SyntheticTeacherParams, load_config
from dmd_switcher.metrics import confusion, f1_score
from dmd_switcher.models import DatasetRecord
from dmd_switcher.router import Router
from dmd_switcher.switcher.network import SwitcherModel
from dmd_switcher.teachers import SyntheticTeacher

ARTIFACTS = [
    "dmd_train.json",
    "dmd_validation.json",
    "dmd_test.json",
    "dmd_summary.json",
    "switcher.bin",
    "train_report.csv",
    "train_summary.json",
    "policy.json",
    "calibration_curve.csv",
    "evaluation.csv",
    "evaluation.md",
    "test_curves.csv",
]


def _run_all(config_path: Path, out: Path):
    config = load_config(config_path, {"output_dir": out})
    orchestrator.run_generate(config)
    orchestrator.run_train(config)
    orchestrator.run_calibrate(config)
    return orchestrator.run_evaluate(config)


def test_pipeline_is_reproducible(pipeline_config: Path, tmp_path: Path):
    _run_all(pipeline_config, tmp_path / "first")
    _run_all(pipeline_config, tmp_path / "second")
    for name in ARTIFACTS:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes(), name
    first = json.loads((tmp_path / "first" / "provenance.json").read_text(encoding="utf-8"))
    second = json.loads((tmp_path / "second" / "provenance.json").read_text(encoding="utf-8"))
    assert first["seeds"] == second["seeds"]
    assert first["commands"] == second["commands"]


def test_different_seed_changes_data(pipeline_config: Path, tmp_path: Path):
    base = load_config(pipeline_config, {"output_dir": tmp_path / "a"})
    other = load_config(pipeline_config, {"output_dir": tmp_path / "b", "seed": 4})
    orchestrator.run_generate(base)
    orchestrator.run_generate(other)
    assert (tmp_path / "a" / "dmd_train.json").read_bytes() != (tmp_path / "b" / "dmd_train.json").read_bytes()


def test_evaluation_table_shape(pipeline_config: Path, tmp_path: Path):
    table = _run_all(pipeline_config, tmp_path / "out")
    frame = table.to_frame()
    assert frame["approach"].tolist() == ["small-only", "large-only", "uncertainty", "switcher"]
    assert frame["reference_f1_pct"].tolist() == [58.2, 87.5, 76.1, 92.1]
    assert frame.loc[0, "large_model_pct"] == 0.0 and frame.loc[1, "large_model_pct"] == 100.0
    assert frame.loc[0, "energy_kj"] < frame.loc[1, "energy_kj"]
    markdown = (tmp_path / "out" / "evaluation.md").read_text(encoding="utf-8")
    assert "reference_f1_pct" in markdown and "not a target" in markdown
    curve = (tmp_path / "out" / "calibration_curve.csv").read_text(encoding="utf-8").splitlines()
    assert curve[0] == "fraction,combined_f1,deferred_count,method"
    # small-only row plus five buckets, for each of the two methods
    assert len(curve) == 1 + 2 * 6


def test_zero_fraction_policy_reproduces_small_only(pipeline_config: Path, tmp_path: Path):
    config = load_config(pipeline_config, {"output_dir": tmp_path / "zero"})
    orchestrator.run_generate(config)
    orchestrator.run_train(config)
    orchestrator.run_calibrate(config)
    policy_path = config.output_dir / orchestrator.POLICY_FILE
    policy = json.loads(policy_path.read_text(encoding="utf-8"))
    policy.update(deferred_fraction=0.0, probability_cutoff=0.0, cutoff_record_id=None)
    policy_path.write_text(json.dumps(policy), encoding="utf-8")
    rows = orchestrator.run_evaluate(config).to_frame().set_index("approach")
    assert rows.loc["switcher", "f1_pct"] == rows.loc["small-only", "f1_pct"]
    assert rows.loc["switcher", "large_model_pct"] == 0.0


def _records(split: str, start: int, n: int):
    return [
        DatasetRecord(record_id=f"{split}-{i:04d}", payload_ref=f"{i}.jpg", label=int(i % 5 < 2), split=split)
        for i in range(start, start + n)
    ]


def test_cascade_beats_both_single_models():
    dim = 16
    small = SyntheticTeacher(
        "small",
        SyntheticTeacherParams(accuracy_positive=0.6, accuracy_negative=0.6, feature_dim=dim, noise_scale=0.3,
                               wrong_confidence_scale=0.5),
        seed=21,
    )
    large = SyntheticTeacher(
        "large", SyntheticTeacherParams(accuracy_positive=0.88, accuracy_negative=0.88, feature_dim=dim), seed=22
    )
    # the small teacher's features point along its direction exactly when it is right, so a linear
    # switcher on that direction is an oracle for "the small answer can be kept"
    oracle = SwitcherModel(
        architecture=MlpArchitecture(input_dim=dim, hidden_dims=[]),
        weights=[small._direction[None, :] * (4.0 / dim)],
        biases=[np.zeros(1)],
    )

    train_records = _records("train", 0, 500)
    test_records = _records("test", 500, 500)
    train_items = calibrate.score_items(oracle, orchestrator.scoring_inputs(train_records, small, large))
    policy = calibrate.select_policy(calibrate.build_curve(train_items, 10), train_items)

    _, _, summary = Router(small, oracle, policy, large).route_batch(test_records)
    test_items = calibrate.score_items(oracle, orchestrator.scoring_inputs(test_records, small, large))
    labels = [item.true_label for item in test_items]
    small_f1 = f1_score(confusion([item.small_pred for item in test_items], labels))
    large_f1 = f1_score(confusion([item.large_pred for item in test_items], labels))
    baseline_f1 = calibrate.uncertainty_f1_at_fraction(test_items, policy.deferred_fraction)

    assert summary.f1 > large_f1 > small_f1
    assert summary.f1 > baseline_f1
