from pathlib import Path

import pytest

from dmd_switcher import dmd
from dmd_switcher.config import SyntheticTeacherParams
from dmd_switcher.errors import ArtifactNotFoundError, DimensionMismatchError, SchemaViolationError
from dmd_switcher.models import DatasetManifest, DatasetRecord, DmdDataset, DmdRecord, TeacherOutput
from dmd_switcher.teachers import ReplayTeacher, SyntheticTeacher

GOLDEN = Path(__file__).parent / "data" / "golden_dmd.json"


def _manifest(n: int = 30, feature_dim: int = 4) -> DatasetManifest:
    splits = ["train", "validation", "test"]
    records = tuple(
        DatasetRecord(record_id=f"r{i:03d}", payload_ref=f"img/{i}.jpg", label=i % 2, split=splits[i % 3])
        for i in range(n)
    )
    counts = {s: sum(1 for r in records if r.split == s) for s in splits}
    return DatasetManifest(name="toy", records=records, feature_dim=feature_dim, split_counts=counts)


def _teachers(feature_dim: int = 4):
    small = SyntheticTeacher("small", SyntheticTeacherParams(accuracy_positive=0.6, accuracy_negative=0.6,
                                                             feature_dim=feature_dim), seed=1)
    large = SyntheticTeacher("large", SyntheticTeacherParams(accuracy_positive=0.9, accuracy_negative=0.9,
                                                             feature_dim=feature_dim), seed=2)
    return small, large


def test_golden_file_round_trips_byte_identically(tmp_path: Path):
    records = dmd.read_dmd(GOLDEN)
    assert records[0].last_hidden_layer == [0.5, -1.75, 2.0, 0.1]
    out = dmd.write_dmd(DmdDataset(split="train", records=records), tmp_path / "copy.json")
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_agreement_label():
    assert dmd.agreement_label(1, 1) == 1
    assert dmd.agreement_label(0, 0) == 1
    assert dmd.agreement_label(0, 1) == 0


def test_generate_labels_by_teacher_agreement():
    manifest = _manifest()
    small, large = _teachers()
    dataset = dmd.generate_dmd(manifest, "train", small, large)
    records = manifest.records_for("train")
    assert len(dataset.records) == len(records)
    for record, item in zip(records, dataset.records):
        s, l = small.predict(record), large.predict(record)
        assert item.image_path == record.payload_ref
        assert item.label == int(s.prediction == l.prediction)
        assert item.last_hidden_layer == s.hidden
    assert dataset.provenance["small"]["role"] == "small"


def test_generate_is_deterministic_across_worker_counts():
    manifest = _manifest(60)
    small, large = _teachers()
    serial = dmd.dumps_dmd(dmd.generate_dmd(manifest, "test", small, large, max_workers=1).records)
    parallel = dmd.dumps_dmd(dmd.generate_dmd(manifest, "test", small, large, max_workers=4).records)
    assert serial == parallel


def test_generate_empty_split():
    manifest = DatasetManifest(name="e", records=(), feature_dim=4, split_counts={})
    small, large = _teachers()
    assert dmd.generate_dmd(manifest, "train", small, large).records == []
    assert dmd.dmd_summary(DmdDataset(split="train")).count == 0


def test_generate_rejects_hidden_width_mismatch():
    manifest = _manifest(3, feature_dim=4)
    fixture = {r.record_id: TeacherOutput(prediction=1, probability=0.9, hidden=[1.0, 2.0]) for r in manifest.records}
    small = ReplayTeacher("small", fixture)
    large = ReplayTeacher("large", fixture)
    with pytest.raises(DimensionMismatchError):
        dmd.generate_dmd(manifest, "train", small, large)


def test_read_dmd_rejects_boolean_label(tmp_path: Path):
    path = tmp_path / "bad.json"
    path.write_text('[{"image_path": "a.jpg", "last_hidden_layer": [1.0], "label": true}]', encoding="utf-8")
    with pytest.raises(SchemaViolationError):
        dmd.read_dmd(path)


def test_read_dmd_rejects_extra_keys(tmp_path: Path):
    path = tmp_path / "bad.json"
    path.write_text('[{"image_path": "a.jpg", "last_hidden_layer": [1.0], "label": 1, "x": 2}]', encoding="utf-8")
    with pytest.raises(SchemaViolationError):
        dmd.read_dmd(path)


def test_read_dmd_missing_file(tmp_path: Path):
    with pytest.raises(ArtifactNotFoundError):
        dmd.read_dmd(tmp_path / "none.json")


def test_summary_statistics():
    dataset = DmdDataset(
        split="train",
        records=[
            DmdRecord(image_path="a", last_hidden_layer=[3.0, 4.0], label=1),
            DmdRecord(image_path="b", last_hidden_layer=[0.0, 1.0], label=0),
        ],
    )
    summary = dmd.dmd_summary(dataset)
    assert summary.count == 2
    assert summary.agree_rate == pytest.approx(0.5)
    assert summary.mean_norm == pytest.approx(3.0)


def test_read_dmd_rejects_ragged_hidden_vectors(tmp_path: Path):
    path = tmp_path / "ragged.json"
    path.write_text(
        '[{"image_path": "a.jpg", "last_hidden_layer": [1.0, 2.0], "label": 1},'
        ' {"image_path": "b.jpg", "last_hidden_layer": [1.0], "label": 0}]',
        encoding="utf-8",
    )
    with pytest.raises(SchemaViolationError) as excinfo:
        dmd.read_dmd(path)
    assert "entry 1" in str(excinfo.value)


def test_read_dmd_checks_expected_width(tmp_path: Path):
    records = [DmdRecord(image_path="a", last_hidden_layer=[1.0, 2.0], label=1)]
    path = dmd.write_dmd(DmdDataset(split="train", records=records), tmp_path / "dmd.json")
    assert dmd.read_dmd(path, expected_dim=2) == records
    with pytest.raises(SchemaViolationError) as excinfo:
        dmd.load_dmd_dataset(path, "train", expected_dim=3)
    assert "entry 0" in str(excinfo.value)


def test_summary_rejects_ragged_dataset():
    dataset = DmdDataset(
        split="train",
        records=[
            DmdRecord(image_path="a", last_hidden_layer=[3.0, 4.0], label=1),
            DmdRecord(image_path="b", last_hidden_layer=[0.0], label=0),
        ],
    )
    with pytest.raises(SchemaViolationError):
        dmd.dmd_summary(dataset)


def test_agreement_rate_matches_independent_teacher_errors():
    # 0.6 * 0.9 + 0.4 * 0.1
    records = tuple(
        DatasetRecord(record_id=f"r{i:04d}", payload_ref=f"img/{i}.jpg", label=i % 2, split="train")
        for i in range(1000)
    )
    manifest = DatasetManifest(name="agree", records=records, feature_dim=4, split_counts={"train": 1000})
    small, large = _teachers()
    summary = dmd.dmd_summary(dmd.generate_dmd(manifest, "train", small, large))
    assert summary.count == 1000
    assert summary.agree_rate == pytest.approx(0.58, abs=0.04)
