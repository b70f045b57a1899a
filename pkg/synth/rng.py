from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngSeed:
    """
    Root seed plus a stream path. Streams are Philox (counter-based) generators
    keyed by SeedSequence spawn keys, so every (seed, stream) pair reproduces
    the same draws on any platform and distinct streams are independent.
    """

    seed: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def spawn(self, index: int) -> "RngSeed":
        return RngSeed(self.seed, self.stream + (int(index),))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(sequence))


def as_seed(seed: RngSeed | int) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
