"""Seedable random-number streams.

Reproducibility contract: equal (seed, stream_id) pairs produce bit-identical
sample sequences across runs and platforms. Parallel tasks must not share a
stream; each derives its own stream_id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ValueError(f"stream_id must be >= 0, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator; identical streams replay identically."""
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((int(self.seed), int(self.stream_id))))
        )

    def derive(self, stream_id: int) -> "RngStream":
        """Same seed, different stream; for independent parallel tasks."""
        return RngStream(self.seed, stream_id)
