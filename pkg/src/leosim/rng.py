"""Reproducible random-number streams for Monte Carlo estimation.

Every estimator in this package is seeded through an :class:`RngStream`
value rather than a stateful generator, so that a run is a pure function
of ``(config, master_seed)``.  Substreams are derived with numpy's
``SeedSequence`` spawning mechanism, which is platform independent, and
the underlying bit generator (PCG64) has a frozen stream contract, so the
same ``(master_seed, path)`` yields the same draws on any machine and
under any thread schedule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Identifier of one deterministic random stream.

    ``path`` generalises a single substream id: ``stream.substream(3, 7)``
    names the same stream on every platform and in every worker process.
    """

    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")

    def substream(self, *ids: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    """Coerce an RngStream value or an already-live generator to a generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng
