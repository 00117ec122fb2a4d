"""Reproducible random streams keyed by ``(master_seed, stream_id, *path)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from supfts.errors import InvalidInputError

__all__ = ["RngSpec"]


@dataclass(frozen=True)
class RngSpec:
    """
    Address of an independent random stream.

    Streams are derived with :class:`numpy.random.SeedSequence`, using the
    master seed as entropy and ``(stream_id, *path)`` as spawn key, so two
    specs that differ anywhere give statistically independent generators
    and an identical spec always reproduces the same draws.
    """

    master_seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.master_seed < 0 or self.stream_id < 0 or any(p < 0 for p in self.path):
            raise InvalidInputError("seeds and stream ids must be non-negative")

    def child(self, *keys: int) -> RngSpec:
        return RngSpec(self.master_seed, self.stream_id, self.path + tuple(keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_id, *self.path)
        )
        return np.random.Generator(np.random.PCG64(seq))

    def describe(self) -> str:
        tail = "".join(f"/{p}" for p in self.path)
        return f"{self.master_seed}:{self.stream_id}{tail}"
