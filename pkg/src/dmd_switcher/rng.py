"""Portable seeded random source.

SplitMix64 is fully specified by integer arithmetic modulo 2**64, so a seed
produces the same stream on every platform. The array methods advance the
state exactly as the equivalent number of scalar draws would.
"""
from __future__ import annotations

import hashlib
from typing import Annotated

import numpy as np
from pydantic import Field

RngSeed = Annotated[int, Field(ge=0, le=2**64 - 1)]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


def derive_seed(seed: int, *names: str) -> int:
    """Child seed keyed by a component name, e.g. ``derive_seed(7, "small")``."""
    key = ":".join([str(seed), *names]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Single-consumer generator; give each worker its own instance."""

    def __init__(self, seed: int) -> None:
        self._seed = seed & _MASK
        self._state = self._seed

    @property
    def seed(self) -> int:
        return self._seed

    @classmethod
    def for_key(cls, seed: int, *names: str) -> "SplitMix64":
        return cls(derive_seed(seed, *names))

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def u64_array(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self._state) + steps * np.uint64(_GAMMA)
            out = _mix_array(states)
        self._state = (self._state + n * _GAMMA) & _MASK
        return out

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, size: int | tuple[int, ...]) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = int(np.prod(shape)) if shape else 1
        bits = self.u64_array(n) >> np.uint64(11)
        return (bits.astype(np.float64) * _INV_2_53).reshape(shape)

    def normal(self, size: int | tuple[int, ...]) -> np.ndarray:
        """Standard normal draws via Box-Muller; consumes two uniforms per value."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = int(np.prod(shape)) if shape else 1
        pairs = self.uniform(2 * n)
        u1 = 1.0 - pairs[:n]  # (0, 1], keeps log finite
        u2 = pairs[n:]
        return (np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.u64_array(n), kind="stable")

    def fork(self, name: str) -> "SplitMix64":
        return SplitMix64(derive_seed(self._seed, name))
