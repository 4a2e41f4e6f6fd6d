"""Deterministic random streams.

Every draw of a run is keyed by ``(master_seed, replicate, purpose)``, so
results do not depend on how replicates are scheduled across workers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TOPOLOGY = 0
_INIT = 1
_ROUND_BASE = 2


@dataclass(frozen=True)
class RunStreams:
    master_seed: int
    replicate: int = 0

    def _gen(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.replicate, *key))
        return np.random.Generator(np.random.PCG64(seq))

    def topology(self) -> np.random.Generator:
        return self._gen(_TOPOLOGY)

    def init(self) -> np.random.Generator:
        return self._gen(_INIT)

    def round(self, t: int) -> np.random.Generator:
        return self._gen(_ROUND_BASE + t)


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
