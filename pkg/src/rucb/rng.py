"""Named, independently seeded random streams.

All randomness in an experiment flows from one root seed.  Each consumer
(uniform selection, threshold draws, top-K draws, corpus generation, ...)
gets its own stream identified by string keys, so re-running one component
with a different seed never perturbs the others.
"""
from __future__ import annotations

import zlib

import numpy as np


def _entropy(seed: int, keys: tuple) -> list[int]:
    out = [int(seed)]
    for key in keys:
        if isinstance(key, str):
            out.append(zlib.crc32(key.encode("utf-8")))
        else:
            out.append(int(key))
    return out


def substream(seed: int, *keys: str | int) -> np.random.Generator:
    """Generator for the stream named by ``keys`` under the root ``seed``.

    String keys are hashed with CRC-32, so names are stable across runs and
    platforms.  Integer keys (sample ids, slice indices) pass through as is
    and must be non-negative.
    """
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, keys)))


def derive_seed(seed: int, *keys: str | int) -> int:
    """Collapse a named stream into a single integer seed."""
    seq = np.random.SeedSequence(_entropy(seed, keys))
    return int(seq.generate_state(1, np.uint64)[0])
