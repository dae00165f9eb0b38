"""Deterministic named random streams.

Every random choice in the library flows from a single 64-bit seed through
named Philox substreams.  Philox is counter-based and platform-independent,
and the substream key is derived by hashing the label path, so results do
not depend on call order, thread scheduling, or PYTHONHASHSEED.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key(seed: int, labels: tuple) -> np.ndarray:
    text = "\x1f".join([str(int(seed))] + [str(part) for part in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64).copy()


def substream(seed: int, *labels) -> np.random.Generator:
    """Return an independent generator for (seed, *labels)."""
    return np.random.Generator(np.random.Philox(key=_key(seed, labels)))


def subseed(seed: int, *labels) -> int:
    """Derive a nested 63-bit integer seed for a child builder."""
    k = _key(seed, labels)
    return int(k[0] & np.uint64((1 << 63) - 1))
