import json
from pathlib import Path

from fastapi.testclient import TestClient
from typer.testing import CliRunner

from conftest import write_pipeline_config
from dmd_switcher import cli, orchestrator

runner = CliRunner()


def _invoke(config: Path, *args: str):
    return runner.invoke(cli.app, ["--config", str(config), *args])


def test_full_pipeline_through_cli(pipeline_config: Path, tmp_path: Path):
    for command in ("generate", "train", "calibrate", "evaluate", "cost"):
        result = _invoke(pipeline_config, command)
        assert result.exit_code == 0, (command, result.output)
    run = tmp_path / "run"
    assert (run / "dmd_train.json").exists()
    assert len(json.loads((run / "dmd_test.json").read_text(encoding="utf-8"))) == 30
    assert (run / "switcher.bin").exists()
    assert json.loads((run / "policy.json").read_text(encoding="utf-8"))["tie_rule"] == "record_id-ascending"
    assert "switcher" in (run / "evaluation.csv").read_text(encoding="utf-8")
    provenance = json.loads((run / "provenance.json").read_text(encoding="utf-8"))
    assert set(provenance["commands"]) == {"generate", "train", "calibrate", "evaluate", "cost"}
    assert provenance["seeds"]["master"] == 3


def test_out_and_seed_flags_override_config(pipeline_config: Path, tmp_path: Path):
    out = tmp_path / "elsewhere"
    result = _invoke(pipeline_config, "--out", str(out), "--seed", "11", "generate")
    assert result.exit_code == 0, result.output
    assert json.loads((out / "provenance.json").read_text(encoding="utf-8"))["seeds"]["master"] == 11


def test_single_cost_estimate(pipeline_config: Path):
    result = _invoke(pipeline_config, "cost", "--fraction", "0.6")
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert abs(report["total_energy"] - 116.758) < 0.01


def test_missing_config_is_a_usage_error(tmp_path: Path):
    result = _invoke(tmp_path / "absent.yaml", "generate")
    assert result.exit_code == 1
    assert "not found" in result.output


def test_unknown_config_key_is_a_usage_error(tmp_path: Path):
    result = _invoke(write_pipeline_config(tmp_path, colour="blue"), "generate")
    assert result.exit_code == 1


def test_train_without_dmd_files_is_a_data_error(pipeline_config: Path):
    result = _invoke(pipeline_config, "train")
    assert result.exit_code == 2
    assert "DMD file not found" in result.output


def test_train_on_ragged_dmd_file_is_a_data_error(pipeline_config: Path, tmp_path: Path):
    run = tmp_path / "run"
    run.mkdir()
    rows = [
        {"image_path": "a.jpg", "last_hidden_layer": [0.1] * 8, "label": 1},
        {"image_path": "b.jpg", "last_hidden_layer": [0.1] * 7, "label": 0},
    ]
    for split in ("train", "validation"):
        (run / f"dmd_{split}.json").write_text(json.dumps(rows), encoding="utf-8")
    result = _invoke(pipeline_config, "train")
    assert result.exit_code == 2
    assert "entry 1" in result.output


def test_replay_miss_is_a_runtime_error(tmp_path: Path):
    fixture = tmp_path / "large.json"
    fixture.write_text('[{"record_id": "img-000", "prediction": 0, "probability": 0.2}]', encoding="utf-8")
    teachers = {
        "small": {"kind": "synthetic", "role": "small", "params": {"feature_dim": 8}},
        "large": {"kind": "replay", "role": "large", "params": {"fixture_path": str(fixture)}},
    }
    result = _invoke(write_pipeline_config(tmp_path, teachers=teachers), "generate")
    assert result.exit_code == 3
    assert "img-001" in result.output


def test_main_maps_click_usage_errors_to_one():
    assert cli.main(["--no-such-flag"]) == 1


def test_serve_without_model_fails_to_start(pipeline_config: Path):
    result = _invoke(pipeline_config, "serve")
    assert result.exit_code == 3
    assert "Cannot start router service" in result.output


def test_serve_answers_health_check(pipeline_config: Path, monkeypatch):
    for command in ("generate", "train", "calibrate"):
        assert _invoke(pipeline_config, command).exit_code == 0
    started = {}

    def fake_run(app, host, port):
        started["app"] = app

    monkeypatch.setattr(orchestrator.uvicorn, "run", fake_run)
    result = _invoke(pipeline_config, "serve")
    assert result.exit_code == 0, result.output
    with TestClient(started["app"]) as client:
        assert client.get("/health").json() == {"status": "ok"}
        response = client.post("/classify", json={"record_id": "img-120", "payload_ref": "images/120.jpg"})
        assert response.status_code == 200
