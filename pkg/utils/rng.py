"""
Counter-keyed random streams.

All randomness flows from numpy SeedSequences keyed by the master seed plus
a tuple of integers naming the consumer. Per-cube draws are produced in
fixed-size chunks keyed by (seed, tag, level, chunk), so the value attached
to a cube never depends on evaluation order or on how work is split.
"""

from typing import List, Sequence

import numpy as np

CHUNK = 4096

# Stream tags keep independent consumers apart.
TAG_SURVIVAL = 1
TAG_CENTERS = 2
TAG_ENERGY = 3
TAG_AUDIT = 4
TAG_MAPS = 5
TAG_LAMBDA = 6


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the consumer named by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def keyed_uniforms(seed: int, tag: int, level: int, indices: Sequence[int]) -> np.ndarray:
    """Uniform(0,1) draws attached to integer counters at a level.

    The draw for counter ``i`` is element ``i % CHUNK`` of the chunk stream
    ``(seed, tag, level, i // CHUNK)``.
    """
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty(idx.shape, dtype=float)
    if idx.size == 0:
        return out
    chunks = idx // CHUNK
    for chunk in np.unique(chunks):
        values = stream(seed, tag, level, int(chunk)).random(CHUNK)
        mask = chunks == chunk
        out[mask] = values[idx[mask] - chunk * CHUNK]
    return out


def seed_list(seed: int, count: int) -> List[int]:
    """Pinned per-run seeds derived from one master seed."""
    ss = np.random.SeedSequence(int(seed))
    return [int(s.generate_state(1)[0]) for s in ss.spawn(count)]


def derive_seed(seed: int, *key: int) -> int:
    """A 32-bit child seed for the consumer named by ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])
