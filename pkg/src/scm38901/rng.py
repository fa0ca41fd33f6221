"""Seedable random streams keyed by name.

Each model instance owns a :class:`RandomStreams`; every stochastic step draws
from its own named generator so that switching a feature on (blockage, say)
never shifts the numbers seen by the other steps.
"""

from __future__ import annotations

import zlib

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class RandomStreams:
    def __init__(self, seed: int = 0, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(path)
        self._streams: dict[str, np.random.Generator] = {}

    def __call__(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=self.path + (_name_key(name),))
            gen = self._streams[name] = np.random.Generator(np.random.PCG64(seq))
        return gen

    def child(self, *key: int | str) -> "RandomStreams":
        """Independent family of streams, e.g. one per Monte-Carlo run."""
        parts = tuple(_name_key(k) if isinstance(k, str) else int(k) for k in key)
        return RandomStreams(self.seed, self.path + (0xC41D,) + parts)


def as_streams(rng: RandomStreams | int | None) -> RandomStreams:
    if isinstance(rng, RandomStreams):
        return rng
    return RandomStreams(0 if rng is None else int(rng))
