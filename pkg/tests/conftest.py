import sys
from pathlib import Path

import pytest
import yaml

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
for path in (ROOT, SRC):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))


def write_pipeline_config(tmp_path: Path, **overrides) -> Path:
    """A small synthetic run: 150 records (90/30/30), 8-dimensional features, a short training budget."""
    splits = ["train"] * 90 + ["validation"] * 30 + ["test"] * 30
    manifest = tmp_path / "manifest.csv"
    lines = ["record_id,payload_ref,label,split"]
    lines += [f"img-{i:03d},images/{i:03d}.jpg,{i % 2},{split}" for i, split in enumerate(splits)]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")

    config = {
        "name": "tiny",
        "manifest_path": str(manifest),
        "feature_dim": 8,
        "teachers": {
            "small": {"kind": "synthetic", "role": "small",
                      "params": {"accuracy_positive": 0.6, "accuracy_negative": 0.6, "feature_dim": 8,
                                 "noise_scale": 0.5, "wrong_confidence_scale": 0.5}},
            "large": {"kind": "synthetic", "role": "large",
                      "params": {"accuracy_positive": 0.88, "accuracy_negative": 0.88, "feature_dim": 8}},
        },
        "architecture": {"input_dim": 8, "hidden_dims": [6]},
        "train": {"max_epochs": 3, "learning_rate": 0.01, "batch_size": 16},
        "bucket_count": 5,
        "output_dir": str(tmp_path / "run"),
        "seed": 3,
        "max_workers": 2,
    }
    config.update(overrides)
    path = tmp_path / "pipeline.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")
    return path


@pytest.fixture
def pipeline_config(tmp_path: Path) -> Path:
    return write_pipeline_config(tmp_path)
