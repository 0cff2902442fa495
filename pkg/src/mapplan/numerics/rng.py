"""Reproducible random streams.

All randomness goes through numpy's PCG64 bit generator seeded from a
``SeedSequence``. Named child streams are derived by appending the CRC-32 of
the stream name to the spawn key, so the same (seed, name) pair yields the
same draws on every platform, independent of how many other streams exist.
"""

from __future__ import annotations

import zlib

import numpy as np


class SeededRng:
    def __init__(self, seed: int, _key: tuple[int, ...] = ()) -> None:
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self.key = tuple(_key)
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key)))

    def stream(self, name: str) -> "SeededRng":
        """Independent child stream identified by ``name``."""
        return SeededRng(self.seed, self.key + (zlib.crc32(name.encode("utf-8")),))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def random(self, size=None):
        return self.gen.random(size)

    def choice(self, options, p=None):
        return options[int(self.gen.choice(len(options), p=p))]


def glorot_uniform(rng: SeededRng, fan_in: int, fan_out: int, shape: tuple[int, ...] | None = None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape if shape is not None else (fan_in, fan_out))
