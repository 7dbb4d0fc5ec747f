"""Seeded substreams.

Every random draw in the package comes from a Philox (counter-based) bit
generator keyed by ``SeedSequence(seed, spawn_key=key)``.  Work that is split
into blocks gets one key per block, so results never depend on how blocks are
scheduled across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

DEFAULT_SEED = 20190712

# purpose tags, first element of every spawn key
GRAPH = 1
WALK = 2
WALK_PILOT = 3
DEPTH = 4
COUPLING = 5
FREE2D = 6
THINNING = 7
SPLIT = 8
CASCADE_IC = 9
SIGMA = 10
SUBMODULAR = 11

BLOCK_SIZE = 1 << 14

T = TypeVar("T")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def blocks(trials: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split ``range(trials)`` into fixed ``(start, stop)`` blocks."""
    return [(s, min(s + block_size, trials)) for s in range(0, trials, block_size)]


def map_blocks(fn: Callable[[int, int, int], T], trials: int, threads: int = 1) -> list[T]:
    """Run ``fn(block_index, start, stop)`` for every block, results in block order."""
    parts = blocks(trials)
    if threads <= 1 or len(parts) == 1:
        return [fn(b, s, e) for b, (s, e) in enumerate(parts)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, b, s, e) for b, (s, e) in enumerate(parts)]
        return [f.result() for f in futures]


def map_ordered(fn: Callable[[T], object], items: Sequence[T], threads: int = 1) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
