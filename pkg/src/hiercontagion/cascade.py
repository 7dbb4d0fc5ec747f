"""Contagion processes on a sampled graph.

``run_r_complex`` is deterministic bootstrap percolation: a vertex becomes
infected once ``r`` of its neighbours are.  ``run_independent_cascade`` is the
single-probability independent cascade, realised as edge percolation followed
by a component search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numba as nb
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import rng
from .sampler import GraphSample

DEFAULT_THETA = 0.99


@dataclass(frozen=True)
class SeedAllocation:
    """Number of seeds per leaf id.  Leaves not listed get zero."""

    counts: Mapping[str, int]

    def __post_init__(self):
        bad = {k: c for k, c in self.counts.items() if int(c) != c or c < 0}
        if bad:
            raise ValueError(f"seed counts must be non-negative integers: {bad}")
        object.__setattr__(self, "counts", {k: int(c) for k, c in self.counts.items()})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @classmethod
    def from_vector(cls, leaf_ids: Iterable[str], vector: Iterable[int]) -> "SeedAllocation":
        return cls(dict(zip(leaf_ids, vector)))

    def vector(self, leaf_ids: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.counts.get(t, 0) for t in leaf_ids)

    def label(self, leaf_ids: Iterable[str]) -> str:
        return "|".join(str(k) for k in self.vector(leaf_ids))


@dataclass(frozen=True)
class CascadeResult:
    infected_total: int
    infected_per_leaf: dict[str, int]
    rounds: int
    activated_leaves: frozenset[str]
    infected: np.ndarray = field(repr=False, compare=False)


@nb.njit(cache=True, nogil=True)
def _bootstrap(indptr, indices, seeds, r, n):
    infected = np.zeros(n, dtype=np.bool_)
    hits = np.zeros(n, dtype=np.int64)
    frontier = np.empty(n, dtype=np.int64)
    size = 0
    for s in seeds:
        if not infected[s]:
            infected[s] = True
            frontier[size] = s
            size += 1
    nxt = np.empty(n, dtype=np.int64)
    rounds = 0
    while size > 0:
        nsize = 0
        for q in range(size):
            u = frontier[q]
            for e in range(indptr[u], indptr[u + 1]):
                w = indices[e]
                if infected[w]:
                    continue
                hits[w] += 1
                if hits[w] >= r:
                    infected[w] = True
                    nxt[nsize] = w
                    nsize += 1
        if nsize > 0:
            rounds += 1
        frontier, nxt = nxt, frontier
        size = nsize
    return infected, rounds


def _summarise(graph: GraphSample, infected: np.ndarray, rounds: int, theta: float) -> CascadeResult:
    sizes = graph.leaf_sizes
    per_leaf = np.bincount(graph.leaf_of[infected], minlength=len(sizes))
    activated = frozenset(
        t for t, k, s in zip(graph.leaf_ids, per_leaf, sizes) if s > 0 and k >= theta * s
    )
    return CascadeResult(
        infected_total=int(infected.sum()),
        infected_per_leaf={t: int(k) for t, k in zip(graph.leaf_ids, per_leaf)},
        rounds=int(rounds),
        activated_leaves=activated,
        infected=infected,
    )


def run_r_complex(graph: GraphSample, seeds: Iterable[int], r: int,
                  theta: float = DEFAULT_THETA) -> CascadeResult:
    """Closure of ``seeds`` under the rule "infected once ``r`` neighbours are".

    Runs in synchronous rounds; ``rounds`` counts the rounds that infected at
    least one new vertex.  A leaf is reported activated when at least a
    ``theta`` fraction of it ends up infected.
    """
    if r < 1:
        raise ValueError(f"threshold r must be >= 1, got {r}")
    seeds = np.fromiter((int(s) for s in seeds), dtype=np.int64)
    if seeds.size and (seeds.min() < 0 or seeds.max() >= graph.n):
        raise ValueError("seed vertex out of range")
    infected, rounds = _bootstrap(graph.indptr, graph.indices, seeds, int(r), graph.n)
    return _summarise(graph, infected, rounds, theta)


def place_seeds(graph: GraphSample, alloc: SeedAllocation) -> np.ndarray:
    """The first ``alloc.counts[t]`` vertices of every leaf ``t``."""
    unknown = set(alloc.counts) - set(graph.leaf_ids)
    if unknown:
        raise KeyError(f"allocation names leaves absent from the graph: {sorted(unknown)}")
    parts = []
    for i, t in enumerate(graph.leaf_ids):
        k = alloc.counts.get(t, 0)
        size = int(graph.leaf_offsets[i + 1] - graph.leaf_offsets[i])
        if k > size:
            raise ValueError(f"leaf {t!r} has {size} vertices, cannot hold {k} seeds")
        parts.append(np.arange(graph.leaf_offsets[i], graph.leaf_offsets[i] + k, dtype=np.int64))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def seeded_component_size(n: int, u: np.ndarray, v: np.ndarray, seeds: np.ndarray) -> int:
    """Total size of the connected components of ``(n, u-v edges)`` touching ``seeds``."""
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size == 0:
        return 0
    adj = csr_matrix((np.ones(len(u), dtype=np.int8), (u, v)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    return int(sizes[np.unique(labels[seeds])].sum())


def run_independent_cascade(graph: GraphSample, seeds: Iterable[int], keep_prob: float,
                            seed: int) -> int:
    """Keep every edge with ``keep_prob``; count vertices in components with a seed."""
    if not 0 <= keep_prob <= 1:
        raise ValueError(f"keep_prob must lie in [0, 1], got {keep_prob}")
    seeds = np.fromiter((int(s) for s in seeds), dtype=np.int64)
    edges = graph.edges()
    gen = rng.substream(seed, rng.CASCADE_IC)
    kept = edges[gen.random(len(edges)) < keep_prob]
    return seeded_component_size(graph.n, kept[:, 0], kept[:, 1], seeds)
