"""Switcher model file.

Byte layout (format version 1):

1. Magic line ``DMDSWITCHER\\n`` (12 bytes, ASCII).
2. One line of UTF-8 JSON, keys sorted, terminated by ``\\n``::

       {"activation": "relu",
        "architecture": {"hidden_dims": [...], "input_dim": N, "output_dim": 1},
        "dtype": "<f8", "format_version": 1,
        "layers": [{"bias": [out], "weight": [out, in]}, ...],
        "training_seed": S | null}

3. Parameters as little-endian IEEE-754 float64, layer by layer: the weight
   matrix in row-major order (rows = output units), then the bias vector.
   Nothing follows the last bias.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
from pydantic import ValidationError

from ..config import MlpArchitecture
from ..errors import ArtifactNotFoundError, SchemaViolationError
from .network import SwitcherModel

MAGIC = b"DMDSWITCHER\n"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


def _header(model: SwitcherModel) -> Dict[str, Any]:
    return {
        "activation": model.activation,
        "architecture": model.architecture.model_dump(),
        "dtype": _DTYPE.str,
        "format_version": FORMAT_VERSION,
        "layers": [{"bias": [b.size], "weight": list(w.shape)} for w, b in zip(model.weights, model.biases)],
        "training_seed": model.seed,
    }


def dumps_model(model: SwitcherModel) -> bytes:
    chunks: List[bytes] = [MAGIC, json.dumps(_header(model), sort_keys=True).encode("utf-8") + b"\n"]
    for weight, bias in zip(model.weights, model.biases):
        chunks.append(np.ascontiguousarray(weight, dtype=_DTYPE).tobytes())
        chunks.append(np.ascontiguousarray(bias, dtype=_DTYPE).tobytes())
    return b"".join(chunks)


def save_model(model: SwitcherModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_model(model))
    return path


def loads_model(data: bytes, source: str = "<bytes>") -> SwitcherModel:
    if not data.startswith(MAGIC):
        raise SchemaViolationError(f"{source} is not a switcher model file")
    header_end = data.find(b"\n", len(MAGIC))
    if header_end < 0:
        raise SchemaViolationError(f"{source}: truncated header")
    try:
        header = json.loads(data[len(MAGIC):header_end].decode("utf-8"))
        architecture = MlpArchitecture(**header["architecture"])
    except (ValueError, KeyError, TypeError, ValidationError) as exc:
        raise SchemaViolationError(f"{source}: unreadable header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise SchemaViolationError(f"{source}: unsupported format version {header.get('format_version')}")
    if header.get("dtype") != _DTYPE.str or header.get("activation") != "relu":
        raise SchemaViolationError(f"{source}: unsupported dtype or activation")

    body = data[header_end + 1:]
    if len(body) % _DTYPE.itemsize:
        raise SchemaViolationError(f"{source}: parameter block is not a whole number of float64 values")
    payload = np.frombuffer(body, dtype=_DTYPE)
    dims = architecture.layer_dims
    expected = sum(fan_out * fan_in + fan_out for fan_in, fan_out in zip(dims, dims[1:]))
    if payload.size != expected:
        raise SchemaViolationError(f"{source}: expected {expected} parameters, found {payload.size}")

    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []
    offset = 0
    for fan_in, fan_out in zip(dims, dims[1:]):
        weights.append(payload[offset:offset + fan_out * fan_in].reshape(fan_out, fan_in).astype(np.float64))
        offset += fan_out * fan_in
        biases.append(payload[offset:offset + fan_out].astype(np.float64))
        offset += fan_out
    model = SwitcherModel(architecture=architecture, weights=weights, biases=biases, seed=header.get("training_seed"))
    if not model.is_finite():
        raise SchemaViolationError(f"{source}: non-finite parameters")
    return model


def load_model(path: str | Path) -> SwitcherModel:
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"Switcher model not found: {path}")
    return loads_model(path.read_bytes(), source=str(path))
