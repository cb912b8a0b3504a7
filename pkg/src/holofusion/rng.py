"""Named, seed-derived random substreams.

Every random quantity in an experiment is drawn from a generator keyed by a
name and a tuple of integer indices, so adding trials or reordering work never
perturbs unrelated draws.
"""
from __future__ import annotations

import zlib

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class RandomStreams:
    """Factory of independent generators derived from one master seed.

    >>> s = RandomStreams(7)
    >>> a = s.generator("scene", 0).random()
    >>> a == RandomStreams(7).generator("scene", 0).random()
    True
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)

    def seed_sequence(self, name: str, *indices: int) -> np.random.SeedSequence:
        key = (_name_key(name),) + tuple(int(i) for i in indices)
        return np.random.SeedSequence(entropy=self.seed, spawn_key=key)

    def generator(self, name: str, *indices: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence(name, *indices)))

    def child_seed(self, name: str, *indices: int) -> int:
        """A 63-bit integer seed for handing a stream to another process."""
        return int(self.seed_sequence(name, *indices).generate_state(1, np.uint64)[0] >> np.uint64(1))

    def __repr__(self) -> str:
        return f"RandomStreams(seed={self.seed})"


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
