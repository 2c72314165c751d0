"""Splittable, counter-based random streams.

Every random draw in the package comes from an ``RngSeed``: a master seed, a
stream index and an optional path of sub-stream keys.  The triple is fed to a
``SeedSequence`` whose output keys a Philox generator, so a trial's numbers
depend only on its own key and never on which worker ran it or in what order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("stream keys must be non-negative")
        return int(key)
    # strings (bitstrings, labels) hash to a stable 64-bit key
    digest = hashlib.blake2b(str(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngSeed:
    master_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.master_seed < 0 or self.stream_index < 0:
            raise ValueError("seed and stream index must be non-negative")
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "path", tuple(_key_to_int(k) for k in self.path))

    def stream(self, index: int) -> "RngSeed":
        """Same master seed, different top-level stream."""
        return RngSeed(self.master_seed, index, self.path)

    def child(self, *keys) -> "RngSeed":
        """Deterministic sub-stream; keys may be ints or strings."""
        return RngSeed(self.master_seed, self.stream_index, self.path + tuple(_key_to_int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,) + self.path)
        return np.random.Generator(np.random.Philox(seq))

    def as_dict(self) -> dict:
        return {"master_seed": self.master_seed, "stream_index": self.stream_index, "path": list(self.path)}


def as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(int(seed))
