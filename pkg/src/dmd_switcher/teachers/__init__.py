"""Teacher oracles: synthetic, replay and remote implementations of one interface."""
from __future__ import annotations

from typing import Optional

import httpx

from ..config import RemoteTeacherParams, ReplayTeacherParams, SyntheticTeacherParams, TeacherSpec
from .base import Teacher
from .remote import RemoteTeacher
from .replay import ReplayTeacher, read_fixture, write_fixture
from .synthetic import SyntheticTeacher


def build_teacher(
    spec: TeacherSpec,
    seed: int,
    feature_dim: Optional[int] = None,
    client: Optional[httpx.Client] = None,
) -> Teacher:
    params = spec.params
    if isinstance(params, SyntheticTeacherParams):
        return SyntheticTeacher(spec.role, params, seed)
    if isinstance(params, ReplayTeacherParams):
        return ReplayTeacher.from_file(spec.role, params.fixture_path, feature_dim)
    if isinstance(params, RemoteTeacherParams):
        return RemoteTeacher(spec.role, params, feature_dim, client=client)
    raise TypeError(f"Unsupported teacher params {type(params).__name__}")


__all__ = [
    "RemoteTeacher",
    "ReplayTeacher",
    "SyntheticTeacher",
    "Teacher",
    "build_teacher",
    "read_fixture",
    "write_fixture",
]
