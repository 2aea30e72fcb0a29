"""Deterministic random substreams.

Every simulation cell (chain replica, diffusion path block, Monte Carlo
batch) draws from its own Philox generator keyed by a tuple of integers, so
results do not depend on how cells are scheduled across workers.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def tag_id(tag: str) -> int:
    """Stable 32-bit id for a string tag (``hash()`` is salted per process)."""
    return zlib.crc32(tag.encode("utf-8"))


def substream(base_seed: int, *key: int | str) -> np.random.Generator:
    """Counter-based generator for the cell ``(base_seed, *key)``."""
    words = [int(base_seed) & _MASK64]
    for k in key:
        words.append(tag_id(k) if isinstance(k, str) else int(k) & _MASK64)
    ss = np.random.SeedSequence(words)
    return np.random.Generator(np.random.Philox(ss))
