"""Write a synthetic 1061-image fall-detection manifest and a pipeline config that runs on it."""
import random
from pathlib import Path

import yaml

from dmd_switcher.data_loader import write_manifest
from dmd_switcher.models import DatasetRecord

SPLIT_SIZES = {"train": 742, "validation": 212, "test": 106}
YOLO_DIRS = {"train": "train", "validation": "valid", "test": "test"}


def generate_records(fall_share: float = 0.45):
    random.seed(42)
    records = []
    for split, size in SPLIT_SIZES.items():
        directory = YOLO_DIRS[split]
        for i in range(size):
            stem = f"frame_{split[:2]}_{i:04d}"
            records.append(
                DatasetRecord(
                    record_id=f"{directory}/{stem}",
                    payload_ref=f"{directory}/images/{stem}.jpg",
                    label=int(random.random() < fall_share),
                    split=split,
                )
            )
    return records


def sample_config(manifest_path: Path) -> dict:
    feature_dim = 64
    return {
        "name": "synthetic-fall-detection",
        "manifest_path": str(manifest_path),
        "feature_dim": feature_dim,
        "teachers": {
            "small": {
                "kind": "synthetic",
                "role": "small",
                "params": {
                    "accuracy_positive": 0.6,
                    "accuracy_negative": 0.6,
                    "feature_dim": feature_dim,
                    "noise_scale": 0.5,
                    "wrong_confidence_scale": 0.5,
                },
            },
            "large": {
                "kind": "synthetic",
                "role": "large",
                "params": {"accuracy_positive": 0.88, "accuracy_negative": 0.88, "feature_dim": feature_dim},
            },
        },
        "architecture": {"input_dim": feature_dim, "hidden_dims": [32, 16]},
        "train": {"learning_rate": 0.001, "max_epochs": 50},
        "bucket_count": 10,
        "budget": {"max_deferral_fraction": 0.8, "window_size": 100},
        "cost_preset": "paper-table1",
        "output_dir": "runs/sample",
        "seed": 7,
    }


def main():
    manifest_path = Path("data/input/manifest.csv")
    records = generate_records()
    write_manifest(records, manifest_path)

    config_path = Path("config/pipeline.yaml")
    config_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(sample_config(manifest_path), f, sort_keys=False)

    print(f"Wrote {len(records)} records to {manifest_path} and a config to {config_path}")


if __name__ == "__main__":
    main()
