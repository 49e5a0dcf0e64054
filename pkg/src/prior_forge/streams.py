"""Deterministic random streams.

Every stochastic routine in the package draws from a RandomStream: a master
seed plus a stream index. Two streams with the same (master_seed,
stream_index) produce identical draws; distinct indices give statistically
independent streams. Parallel work items derive per-item substreams so
results do not depend on scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RandomStream:
    """Reproducible source of randomness.

    master_seed: 64-bit unsigned integer seeding the whole run.
    stream_index: nonnegative integer isolating this consumer from others
        that share the master seed.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Fresh generator for this stream; repeated calls restart the stream."""
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.default_rng(ss)

    def substream(self, index: int) -> np.random.Generator:
        """Generator for work item `index` within this stream.

        Used by parallel loops: item k always sees the same draws no matter
        which thread runs it or in what order.
        """
        if index < 0:
            raise ValueError("substream index must be nonnegative")
        ss = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_index, index)
        )
        return np.random.default_rng(ss)
