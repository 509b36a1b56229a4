"""Deterministic randomness with labelled sub-streams.

Every stochastic component draws from a SeededRng. Sub-streams are derived
from (seed, label) only, never from draw order, so independent components
can be reordered or parallelised without changing any output.
"""

from __future__ import annotations

import hashlib

import numpy as np


class SeededRng:
    """PCG64 generator keyed by a 64-bit seed plus a label-derived spawn key.

    Equal seeds yield equal draw sequences on every platform (numpy's
    SeedSequence/PCG64 stability guarantee). `substream(label)` gives an
    independent generator that depends only on (seed, label path).
    """

    def __init__(self, seed: int, _key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._key = tuple(_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self._key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, label: str) -> "SeededRng":
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        words = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
        return SeededRng(self.seed, self._key + words)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, key={self._key})"
