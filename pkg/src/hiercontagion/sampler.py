"""Graph sampling from a hierarchy tree at a concrete ``n``.

Vertices are numbered contiguously leaf by leaf (pre-order leaf order).  Each
unordered pair of leaves is a block whose vertex pairs carry the weight of the
leaves' least common ancestor; blocks are sampled independently from their own
substream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numba as nb
import numpy as np

from . import rng
from .model import HierarchyTree, lca_weight

DENSE_CUTOFF = 0.1
_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class GraphSample:
    """Undirected simple graph in CSR form plus the vertex -> leaf map.

    ``indptr``/``indices`` list the neighbours of every vertex in ascending
    order; ``leaf_offsets[i]:leaf_offsets[i+1]`` are the vertices of leaf
    ``leaf_ids[i]``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    leaf_ids: tuple[str, ...]
    leaf_offsets: np.ndarray
    rng_seed: int

    @classmethod
    def from_edges(cls, n: int, edges, leaf_sizes: Sequence[int] | None = None,
                   leaf_ids: Sequence[str] | None = None) -> "GraphSample":
        """Build from an explicit edge list (duplicates and self-loops rejected)."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if (e[:, 0] == e[:, 1]).any():
            raise ValueError("self-loops are not allowed")
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        if len(np.unique(lo * n + hi)) != len(e):
            raise ValueError("duplicate edges")
        sizes = [n] if leaf_sizes is None else list(leaf_sizes)
        if sum(sizes) != n:
            raise ValueError("leaf sizes must sum to n")
        offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        ids = tuple(leaf_ids) if leaf_ids is not None else tuple(str(i) for i in range(len(sizes)))
        indptr, indices = _csr(n, lo, hi)
        return cls(n, indptr, indices, ids, offsets, -1)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    @property
    def leaf_sizes(self) -> np.ndarray:
        return np.diff(self.leaf_offsets)

    @property
    def leaf_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.leaf_ids)), self.leaf_sizes)

    def leaf_vertices(self, leaf_id: str) -> range:
        i = self.leaf_ids.index(leaf_id)
        return range(int(self.leaf_offsets[i]), int(self.leaf_offsets[i + 1]))

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges ``u < v``, sorted."""
        src = np.repeat(np.arange(self.n, dtype=self.indices.dtype), np.diff(self.indptr))
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def write_edgelist(self, out: TextIO) -> None:
        out.write(f"# n={self.n} seed={self.rng_seed}\n")
        e = self.edges()
        if len(e):
            np.savetxt(out, e, fmt="%d")


def leaf_counts(fractions: Sequence[float], n: int) -> np.ndarray:
    """Largest-remainder rounding of ``fractions * n``; ties go to earlier leaves."""
    exact = np.asarray(fractions, dtype=float) * n
    base = np.floor(exact).astype(np.int64)
    short = n - int(base.sum())
    rem = exact - base
    order = sorted(range(len(rem)), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        base[i] += 1
    return base


def _pair_from_triangle(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map ``idx in [0, s(s-1)/2)`` to pairs ``i < j`` with idx = j(j-1)/2 + i."""
    j = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0).astype(np.int64)
    # float sqrt can be off by one near perfect squares
    j -= (j * (j - 1) // 2) > idx
    j += ((j + 1) * j // 2) <= idx
    i = idx - j * (j - 1) // 2
    return i, j


def _geometric_skip(gen: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Indices in ``[0, total)`` kept independently with probability ``p``.

    Gaps between kept indices are i.i.d. Geometric(p), so the output is sorted
    and costs O(expected count) draws.
    """
    mean = total * p
    batch = int(mean + 5 * math.sqrt(mean) + 16)
    parts = []
    last = -1
    while True:
        idx = last + np.cumsum(gen.geometric(p, size=batch))
        if idx[-1] >= total:
            parts.append(idx[idx < total])
            break
        parts.append(idx)
        last = int(idx[-1])
        batch = max(16, batch // 4)
    return np.concatenate(parts)


def _block_indices(gen: np.random.Generator, total: int, p: float) -> np.ndarray:
    if p <= 0 or total == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    if p > DENSE_CUTOFF:
        parts = []
        for start in range(0, total, _CHUNK):
            stop = min(total, start + _CHUNK)
            parts.append(start + np.flatnonzero(gen.random(stop - start) < p))
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return _geometric_skip(gen, total, p)


def sample_block(gen: np.random.Generator, off_a: int, size_a: int, off_b: int, size_b: int,
                 p: float) -> tuple[np.ndarray, np.ndarray]:
    """Edges of one block; ``off_a == off_b`` means a within-leaf block."""
    if off_a == off_b:
        idx = _block_indices(gen, size_a * (size_a - 1) // 2, p)
        i, j = _pair_from_triangle(idx)
        return off_a + i, off_a + j
    idx = _block_indices(gen, size_a * size_b, p)
    return off_a + idx // size_b, off_b + idx % size_b


@nb.njit(cache=True)
def _fill_csr(n, u, v, indptr, out):
    pos = indptr[:-1].copy()
    for e in range(u.shape[0]):
        a = u[e]
        b = v[e]
        out[pos[a]] = b
        pos[a] += 1
        out[pos[b]] = a
        pos[b] += 1
    for x in range(n):
        out[indptr[x]:indptr[x + 1]].sort()


def _csr(n: int, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Counting-sort CSR build; neighbour lists come out sorted."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    counts = np.bincount(u, minlength=n) + np.bincount(v, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    dtype = np.int32 if n < 2**31 else np.int64
    indices = np.empty(int(indptr[-1]), dtype=dtype)
    _fill_csr(n, u, v, indptr, indices)
    return indptr, indices


def sample_blocks(sizes: Sequence[int], probs: np.ndarray, seed: int,
                  leaf_ids: Sequence[str] | None = None, threads: int = 1) -> GraphSample:
    """Sample a graph whose leaf blocks ``a <= b`` have edge probability ``probs[a, b]``."""
    sizes = np.asarray(sizes, dtype=np.int64)
    offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    n = int(offsets[-1])
    pairs = [(a, b) for a in range(len(sizes)) for b in range(a, len(sizes))]

    def one(pair):
        a, b = pair
        gen = rng.substream(seed, rng.GRAPH, a, b)
        return sample_block(gen, int(offsets[a]), int(sizes[a]), int(offsets[b]), int(sizes[b]),
                            float(probs[a, b]))

    results = rng.map_ordered(one, pairs, threads)
    u = np.concatenate([r[0] for r in results]) if results else np.empty(0, np.int64)
    v = np.concatenate([r[1] for r in results]) if results else np.empty(0, np.int64)
    indptr, indices = _csr(n, u, v)
    if leaf_ids is None:
        leaf_ids = [str(i) for i in range(len(sizes))]
    return GraphSample(n, indptr, indices, tuple(leaf_ids), offsets, int(seed))


def block_probabilities(tree: HierarchyTree, n: int) -> np.ndarray:
    leaves = tree.leaves()
    L = len(leaves)
    probs = np.zeros((L, L))
    for a in range(L):
        for b in range(a, L):
            probs[a, b] = probs[b, a] = lca_weight(leaves[a], leaves[b], tree)(n)
    return probs


def sample_graph(tree: HierarchyTree, n: int, seed: int, threads: int = 1) -> GraphSample:
    """Draw ``G ~ G(n, T)``: each vertex pair independently with its LCA weight at ``n``."""
    leaves = tree.leaves()
    if n < len(leaves):
        raise ValueError(f"n={n} is smaller than the number of leaves ({len(leaves)})")
    sizes = leaf_counts([t.v for t in leaves], n)
    if (sizes < 1).any():
        empty = [t.id for t, s in zip(leaves, sizes) if s < 1]
        raise ValueError(f"n={n} leaves these leaves without vertices: {empty}")
    return sample_blocks(sizes, block_probabilities(tree, n), seed, [t.id for t in leaves], threads)


def sample_gnp(n: int, p: float, seed: int) -> GraphSample:
    """Erdos-Renyi ``G(n, p)``, a single leaf called ``"root"``."""
    if not 0 <= p <= 1 or math.isnan(p):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return sample_blocks([n], np.array([[p]]), seed, ["root"])
