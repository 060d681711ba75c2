"""Deterministic, splittable random streams for parallel Monte Carlo.

Every stochastic quantity in this package is a pure function of a root seed
and a small integer key path.  Streams are backed by the counter-based
Philox generator, so disjoint key paths give statistically independent
streams and the same (seed, key) pair always reproduces the same draws,
regardless of how many workers the sampling was spread over.
"""

from __future__ import annotations

import numpy as np

DEFAULT_PARTITION_SIZE = 16384


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator identified by ``(seed, key)``.

    Distinct key paths yield independent streams; identical paths yield
    bit-identical draw sequences.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def partition_plan(total: int, size: int = DEFAULT_PARTITION_SIZE) -> list[tuple[int, int]]:
    """Split ``total`` draws into fixed-size partitions.

    Returns (partition_index, count) pairs. The plan depends only on
    (total, size), so estimates combined in partition order are
    reproducible for any worker count.
    """
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    if size < 1:
        raise ValueError(f"partition size must be >= 1, got {size}")
    plan = []
    offset = 0
    index = 0
    while offset < total:
        count = min(size, total - offset)
        plan.append((index, count))
        offset += count
        index += 1
    return plan
