"""Seed allocation: dynamic program over maximal dense subtrees, Monte Carlo
estimates of the infected fraction, and a brute-force allocation oracle.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, TextIO

import numpy as np
from scipy.optimize import brentq

from . import rng, walk
from .cascade import (DEFAULT_THETA, SeedAllocation, place_seeds, run_r_complex,
                      seeded_component_size)
from .model import (Criticality, HierarchyTree, TreeNode, activatable_fraction, classify,
                    densest_leaf, density, maximal_dense_subtrees, node)
from .sampler import block_probabilities, leaf_counts, sample_blocks, sample_graph

DEFAULT_COMPOSITION_CAP = 10_000


@dataclass(frozen=True)
class WalkConfig:
    """How the critical-leaf hit probabilities behind h-values are estimated."""

    trials: int = 200_000
    max_iter: int = walk.DEFAULT_MAX_ITER
    seed: int = rng.DEFAULT_SEED
    threads: int = 1


@dataclass(frozen=True)
class HValueTable:
    """``values[i, k]`` = h(T_i, k) for subtree ``roots[i]`` and ``k = 0..K``."""

    roots: tuple[TreeNode, ...]
    values: np.ndarray
    provenance: np.ndarray   # "theoretical" | "monte-carlo", same shape as values
    se: np.ndarray

    @property
    def K(self) -> int:
        return self.values.shape[1] - 1

    def check(self, r: int | None = None) -> None:
        v = self.values
        if (v < 0).any() or (v > 1 + 1e-12).any():
            raise ValueError("h-values must lie in [0, 1]")
        if (np.diff(v, axis=1) < 0).any():
            raise ValueError("h-values must be nondecreasing in k")
        for i, root in enumerate(self.roots):
            if v[i].max() > root.v + 1e-9:
                raise ValueError(f"h-values of subtree {root.id!r} exceed its vertex fraction")
        if r is not None and (v[:, :min(r, v.shape[1])] != 0).any():
            raise ValueError(f"h-values must vanish below k = r = {r}")

    def write_csv(self, out: TextIO) -> None:
        out.write("subtree,k,h,se,provenance\n")
        for i, root in enumerate(self.roots):
            for k in range(self.values.shape[1]):
                out.write(f"{root.id},{k},{self.values[i, k]:.10g},{self.se[i, k]:.6g},"
                          f"{self.provenance[i, k]}\n")


@dataclass(frozen=True)
class AllocationResult:
    allocation: SeedAllocation
    value: float
    uncertainty: float
    method: str            # "dp" | "brute-force" | "monte-carlo"
    activation: dict[str, float] = field(default_factory=dict)
    dp_table: np.ndarray | None = field(default=None, repr=False)
    samples: np.ndarray | None = field(default=None, repr=False)   # per-trial fractions


def _subtree_leaves_activatable(root: TreeNode, r: int) -> float:
    return activatable_fraction(HierarchyTree(root, r), r)


def h_theoretical(root: TreeNode, k: int, r: int, walk_config: WalkConfig | None = None) -> float:
    """Limit infected fraction contributed by a dense subtree given ``k`` seeds
    on its densest leaf."""
    return float(h_theoretical_row(root, k, r, walk_config)[0][k])


def h_theoretical_row(root: TreeNode, K: int, r: int, walk_config: WalkConfig | None = None):
    """h-values and standard errors for ``k = 0..K`` on one subtree."""
    walk_config = walk_config or WalkConfig()
    values = np.zeros(K + 1)
    se = np.zeros(K + 1)
    star = densest_leaf(root, r)
    kind = classify(star, r)
    if kind is Criticality.SUBCRITICAL or K < r:
        return values, se
    F = _subtree_leaves_activatable(root, r)
    ks = list(range(r, K + 1))
    if kind is Criticality.SUPERCRITICAL:
        values[r:] = F
        return values, se
    c_star = density(star, r).coeff
    ests = walk.hit_probs_common(ks, c_star, r, walk_config.trials, walk_config.max_iter,
                                 walk_config.seed, walk_config.threads)
    for k, e in zip(ks, ests):
        values[k] = (1.0 - e.p_hat) * F
        se[k] = e.se * F
    return values, se


def _relative_tree(root: TreeNode, r: int) -> HierarchyTree:
    """The subtree as a standalone tree with vertex fractions summing to 1."""
    scale = root.v

    def copy(t: TreeNode) -> TreeNode:
        if t.is_leaf:
            return TreeNode(t.id, t.weight, (), t.v / scale)
        return TreeNode(t.id, t.weight, tuple(copy(c) for c in t.children))

    return HierarchyTree(copy(root), r)


def build_h_table(tree: HierarchyTree, K: int, r: int | None = None, mode: str = "theoretical",
                  walk_config: WalkConfig | None = None, n: int | None = None,
                  trials: int = 200, theta: float = DEFAULT_THETA,
                  seed: int = rng.DEFAULT_SEED) -> HValueTable:
    """h-table over the maximal dense subtrees of ``tree``.

    ``mode="monte-carlo"`` instead samples the subtree graph at ``v(root_i) n``
    vertices, seeds its densest leaf, and reports infected vertices divided by
    ``n``.  Seeds are nested in ``k`` and graphs are shared across ``k``, so the
    row is nondecreasing.
    """
    r = tree.r if r is None else r
    roots = tuple(maximal_dense_subtrees(tree))
    values = np.zeros((len(roots), K + 1))
    se = np.zeros_like(values)
    if mode == "theoretical":
        for i, root in enumerate(roots):
            values[i], se[i] = h_theoretical_row(root, K, r, walk_config)
    elif mode == "monte-carlo":
        if n is None:
            raise ValueError("monte-carlo h-values need a reference n")
        for i, root in enumerate(roots):
            sub = _relative_tree(root, r)
            m = int(round(root.v * n))
            star = densest_leaf(sub.root, r).id
            samples = np.zeros((trials, K + 1))
            for t in range(trials):
                g = sample_graph(sub, m, _trial_seed(seed, i, t))
                for k in range(K + 1):
                    seeds = place_seeds(g, SeedAllocation({star: k}))
                    samples[t, k] = run_r_complex(g, seeds, r, theta).infected_total / n
            values[i] = samples.mean(axis=0)
            se[i] = samples.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
    else:
        raise ValueError(f"unknown h-table mode {mode!r}")
    provenance = np.full(values.shape, mode, dtype=object)
    table = HValueTable(roots, values, provenance, se)
    table.check(r if mode == "theoretical" else None)
    return table


def _trial_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


def dp_over_tables(h: np.ndarray) -> tuple[float, tuple[int, ...], np.ndarray]:
    """Exact DP: maximise ``sum_i h[i, k_i]`` subject to ``sum k_i = K``.

    Ties in the inner argmax go to the smallest ``k_i``.  Returns the optimal
    value, the optimal split and the table ``H[i, k]``.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[1] < 1:
        raise ValueError("h must be a 2-D table with columns k = 0..K")
    m, K1 = h.shape
    H = np.empty((m, K1))
    choice = np.zeros((m, K1), dtype=np.int64)
    H[0] = h[0]
    choice[0] = np.arange(K1)
    for i in range(1, m):
        for k in range(K1):
            best, arg = -math.inf, 0
            for ki in range(k + 1):
                val = H[i - 1, k - ki] + h[i, ki]
                if val > best:
                    best, arg = val, ki
            H[i, k] = best
            choice[i, k] = arg
    split = [0] * m
    k = K1 - 1
    for i in range(m - 1, -1, -1):
        split[i] = int(choice[i, k])
        k -= split[i]
    return float(H[m - 1, K1 - 1]), tuple(split), H


def dp_allocate(tree: HierarchyTree, K: int, r: int | None, h_table: HValueTable) -> AllocationResult:
    """Split ``K`` seeds across dense subtrees; each share goes to that
    subtree's densest leaf."""
    r = tree.r if r is None else r
    roots = tuple(maximal_dense_subtrees(tree))
    if len(roots) != len(h_table.roots) or h_table.values.shape[1] != K + 1:
        raise ValueError(
            f"h-table has shape {h_table.values.shape}, expected ({len(roots)}, {K + 1})"
        )
    if any(a is not b for a, b in zip(roots, h_table.roots)):
        raise ValueError("h-table subtrees do not match the tree's maximal dense subtrees")
    value, split, H = dp_over_tables(h_table.values)
    counts = {leaf.id: 0 for leaf in tree.leaves()}
    for root, ki in zip(roots, split):
        if ki:
            counts[densest_leaf(root, r).id] += ki
    err = math.sqrt(sum(h_table.se[i, ki] ** 2 for i, ki in enumerate(split)))
    return AllocationResult(SeedAllocation(counts), value, err, "dp", dp_table=H)


def compositions(K: int, parts: int):
    """All tuples of ``parts`` non-negative integers summing to ``K``, in
    reverse-lexicographic order (``(K, 0, ..)`` first)."""
    for bars in itertools.combinations(range(K + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(K + parts - 1 - prev - 1)
        yield tuple(out)


def n_compositions(K: int, parts: int) -> int:
    return math.comb(K + parts - 1, parts - 1)


def _sigma_samples(tree: HierarchyTree, n: int, allocs: Sequence[SeedAllocation], r: int,
                   trials: int, theta: float, seed: int):
    leaf_ids = [t.id for t in tree.leaves()]
    sizes = leaf_counts([t.v for t in tree.leaves()], n)
    for a in allocs:
        for t, k in a.counts.items():
            if t not in leaf_ids:
                raise KeyError(f"allocation names unknown leaf {t!r}")
            if k > sizes[leaf_ids.index(t)]:
                raise ValueError(f"allocation puts {k} seeds on leaf {t!r} of size "
                                 f"{sizes[leaf_ids.index(t)]} at n={n}")
    frac = np.zeros((len(allocs), trials))
    active = np.zeros((len(allocs), len(leaf_ids)))
    for t in range(trials):
        g = sample_graph(tree, n, _trial_seed(seed, rng.SIGMA, t))
        for j, a in enumerate(allocs):
            if a.total == 0:
                continue
            res = run_r_complex(g, place_seeds(g, a), r, theta)
            frac[j, t] = res.infected_total / n
            for li, leaf in enumerate(leaf_ids):
                active[j, li] += leaf in res.activated_leaves
    return frac, active / max(trials, 1), leaf_ids


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def estimate_sigma(tree: HierarchyTree, n: int, alloc: SeedAllocation, r: int | None = None,
                   trials: int = 100, theta: float = DEFAULT_THETA,
                   seed: int = rng.DEFAULT_SEED) -> AllocationResult:
    """Monte Carlo mean infected fraction of ``G(n, T)`` under ``alloc``."""
    r = tree.r if r is None else r
    frac, active, leaf_ids = _sigma_samples(tree, n, [alloc], r, trials, theta, seed)
    mean, se = _mean_se(frac[0])
    return AllocationResult(alloc, mean, se, "monte-carlo",
                            activation=dict(zip(leaf_ids, active[0])), samples=frac[0])


@dataclass(frozen=True)
class BruteForceRanking:
    """Allocations ranked by estimated value, with the per-trial samples kept
    for paired comparisons."""

    results: list[AllocationResult]
    samples: np.ndarray = field(repr=False)   # rows follow ``results``
    leaf_ids: tuple[str, ...]

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)

    def __getitem__(self, i):
        return self.results[i]

    def paired_difference(self, i: int, j: int) -> tuple[float, float]:
        """Mean and standard error of ``value[i] - value[j]`` over shared graphs."""
        return _mean_se(self.samples[i] - self.samples[j])

    def write_csv(self, out: TextIO) -> None:
        out.write("allocation,mean,se,rank\n")
        for rank, res in enumerate(self.results, start=1):
            out.write(f"{res.allocation.label(self.leaf_ids)},{res.value:.10g},"
                      f"{res.uncertainty:.6g},{rank}\n")


def brute_force_allocate(tree: HierarchyTree, K: int, r: int | None, n: int,
                         trials_per_alloc: int, seed: int = rng.DEFAULT_SEED,
                         theta: float = DEFAULT_THETA,
                         cap: int = DEFAULT_COMPOSITION_CAP) -> BruteForceRanking:
    """Every allocation of ``K`` seeds over the leaves, evaluated on shared
    graph samples and ranked by estimated value (stable on ties)."""
    r = tree.r if r is None else r
    leaf_ids = [t.id for t in tree.leaves()]
    count = n_compositions(K, len(leaf_ids))
    if count > cap:
        raise ValueError(f"{count} allocations exceed the cap of {cap}")
    allocs = [SeedAllocation.from_vector(leaf_ids, v) for v in compositions(K, len(leaf_ids))]
    frac, active, _ = _sigma_samples(tree, n, allocs, r, trials_per_alloc, theta, seed)
    results = []
    for j, a in enumerate(allocs):
        mean, se = _mean_se(frac[j])
        results.append(AllocationResult(a, mean, se, "brute-force",
                                        activation=dict(zip(leaf_ids, active[j])),
                                        samples=frac[j]))
    order = sorted(range(len(allocs)), key=lambda j: -results[j].value)
    return BruteForceRanking([results[j] for j in order], frac[order], tuple(leaf_ids))


# --------------------------------------------------------------------------
# the submodular contrast

def giant_fraction(mean_degree: float) -> float:
    """Survival probability g of a Poisson(mean_degree) branching process:
    the root of ``g = 1 - exp(-d g)`` in (0, 1], or 0 when d <= 1."""
    if mean_degree <= 1:
        return 0.0
    return brentq(lambda g: g - 1 + math.exp(-mean_degree * g), 1e-12, 1.0)


@dataclass(frozen=True)
class SubmodularReport:
    K: int
    r: int
    n: int
    keep_prob: float
    trials: int
    leaf_mean_degree: float
    spread_mean: float
    spread_se: float
    concentrated_mean: float
    concentrated_se: float
    diff_mean: float
    diff_se: float
    oracle_spread: float
    oracle_concentrated: float

    @property
    def combined_se(self) -> float:
        return math.hypot(self.spread_se, self.concentrated_se)

    @property
    def spread_wins(self) -> bool:
        return self.spread_mean - self.concentrated_mean > 2 * self.combined_se


def submodular_tree(K: int, r: int) -> HierarchyTree:
    """Root of weight n^-(1 + 1/(2r)) over ``K`` equal leaves of weight 1."""
    leaves = [node(f"leaf{i}", 1.0, 0, v=1.0 / K) for i in range(K)]
    return HierarchyTree(node("root", 1.0, 1 + Fraction(1, 2 * r), children=leaves), r)


def submodular_oracle(K: int, n: int, keep_prob: float) -> tuple[float, float, float]:
    """Branching-process predictions (spread, concentrated) in vertices."""
    s = n / K
    d = (s - 1) * keep_prob
    g = giant_fraction(d)
    giant = g * s
    # a seed outside the giant sits in a small component of mean size 1/(1 - d(1-g))
    small = 1.0 / (1.0 - d * (1.0 - g)) if d * (1 - g) < 1 else 0.0
    spread = K * (g * giant + (1 - g) * small)
    p_any = 1 - (1 - g) ** K
    concentrated = p_any * giant + K * (1 - g) * small
    return spread, concentrated, d


def submodular_demo(K: int, r: int, n: int, trials: int, seed: int = rng.DEFAULT_SEED,
                    keep_prob: float | None = None, threads: int = 1) -> SubmodularReport:
    """Independent cascade on the two-level tree: one seed per leaf vs all
    seeds in the first leaf, evaluated on the same percolated graphs.

    Sampling ``G(n, T)`` and then keeping each edge with ``keep_prob`` is the
    same as sampling each pair with probability ``w * keep_prob`` directly,
    which is what is done here (the leaves of weight 1 are complete graphs).
    """
    tree = submodular_tree(K, r)
    if keep_prob is None:
        keep_prob = float(n) ** (-(1 - 1 / (4 * r)))
    sizes = leaf_counts([1.0 / K] * K, n)
    probs = block_probabilities(tree, n) * keep_prob
    oracle_spread, oracle_conc, d = submodular_oracle(K, n, keep_prob)
    if d <= 1:
        warnings.warn(f"within-leaf mean degree {d:.3f} <= 1: no giant components at n={n}")
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    spread_seeds = offsets[:-1]
    conc_seeds = np.arange(K)
    spread = np.zeros(trials)
    conc = np.zeros(trials)
    leaf_ids = [t.id for t in tree.leaves()]
    for t in range(trials):
        g = sample_blocks(sizes, probs, _trial_seed(seed, rng.SUBMODULAR, t), leaf_ids, threads)
        e = g.edges()
        spread[t] = seeded_component_size(g.n, e[:, 0], e[:, 1], spread_seeds)
        conc[t] = seeded_component_size(g.n, e[:, 0], e[:, 1], conc_seeds)
    sm, sse = _mean_se(spread)
    cm, cse = _mean_se(conc)
    dm, dse = _mean_se(spread - conc)
    return SubmodularReport(K, r, n, keep_prob, trials, d, sm, sse, cm, cse, dm, dse,
                            oracle_spread, oracle_conc)
