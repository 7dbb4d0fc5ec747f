"""Succinct hierarchical blockmodel trees.

A tree node carries a power-law weight ``c * n**(-a)`` with an exact rational
exponent ``a``; leaves carry the fraction ``v`` of vertices they own.  All
asymptotic statements (``omega``, ``Theta``, ``o`` in ``n``) reduce to exact
comparisons between exponents, so nothing here touches floating point except
coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Union

# Exponents are plain Fractions: exact, normalised to lowest terms.
Exponent = Fraction

V_SUM_TOL = 1e-9


def as_exponent(value) -> Fraction:
    """Coerce ``value`` (Fraction, int, "3/2", or ``(num, den)``) to an exponent."""
    if isinstance(value, Fraction):
        out = value
    elif isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError(f"exponent pair must have two entries, got {value!r}")
        num, den = value
        if int(num) != num or int(den) != den:
            raise ValueError(f"exponent pair must be integers, got {value!r}")
        out = Fraction(int(num), int(den))
    elif isinstance(value, (int, str)):
        out = Fraction(value)
    else:
        raise TypeError(f"cannot interpret {value!r} as an exact exponent")
    if out < 0:
        raise ValueError(f"exponent must be non-negative, got {out}")
    return out


@dataclass(frozen=True)
class PowerLawWeight:
    """Edge-probability function ``n -> min(1, coeff * n**(-exponent))``."""

    coeff: float
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "exponent", as_exponent(self.exponent))
        object.__setattr__(self, "coeff", float(self.coeff))

    def __call__(self, n: int) -> float:
        return min(1.0, self.coeff * float(n) ** (-float(self.exponent)))


class Criticality(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True, order=True)
class DensityValue:
    """``rho(t) = coeff * n**exponent_of_n``; ordered by exponent, then coeff."""

    exponent_of_n: Fraction
    coeff: float


@dataclass(frozen=True, eq=False)
class TreeNode:
    id: str
    weight: PowerLawWeight
    children: tuple["TreeNode", ...] = ()
    leaf_v: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def exponent(self) -> Fraction:
        return self.weight.exponent

    @property
    def coeff(self) -> float:
        return self.weight.coeff

    @cached_property
    def v(self) -> float:
        """Vertex fraction; stored on leaves, summed over children otherwise."""
        if self.is_leaf:
            return float(self.leaf_v) if self.leaf_v is not None else float("nan")
        return math.fsum(c.v for c in self.children)

    def walk(self) -> Iterator["TreeNode"]:
        """Pre-order traversal."""
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> list["TreeNode"]:
        return [t for t in self.walk() if t.is_leaf]

    def __repr__(self):
        kind = f"v={self.leaf_v}" if self.is_leaf else f"{len(self.children)} children"
        return f"TreeNode({self.id!r}, c={self.coeff:g}, a={self.exponent}, {kind})"


def node(id: str, coeff: float, exp, v: float | None = None, children=()) -> TreeNode:
    """Shorthand constructor: ``node("A", 1.0, "1/2", v=0.5)``."""
    return TreeNode(id, PowerLawWeight(coeff, as_exponent(exp)), tuple(children), v)


@dataclass(frozen=True, eq=False)
class HierarchyTree:
    root: TreeNode
    r: int = 2
    _parent: dict = field(init=False, repr=False, compare=False)
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        parent: dict[int, TreeNode | None] = {id(self.root): None}
        by_id: dict[str, TreeNode] = {}
        for t in self.root.walk():
            by_id.setdefault(t.id, t)
            for c in t.children:
                parent[id(c)] = t
        object.__setattr__(self, "_parent", parent)
        object.__setattr__(self, "_by_id", by_id)

    def leaves(self) -> list[TreeNode]:
        return self.root.leaves()

    def nodes(self) -> list[TreeNode]:
        return list(self.root.walk())

    def __getitem__(self, node_id: str) -> TreeNode:
        return self._by_id[node_id]

    def __contains__(self, t) -> bool:
        return id(t) in self._parent if isinstance(t, TreeNode) else t in self._by_id

    def resolve(self, t: Union[TreeNode, str]) -> TreeNode:
        if isinstance(t, str):
            if t not in self._by_id:
                raise KeyError(f"no node with id {t!r} in tree")
            return self._by_id[t]
        if id(t) not in self._parent:
            raise KeyError(f"node {t.id!r} is not part of this tree")
        return t

    def parent(self, t: TreeNode) -> TreeNode | None:
        return self._parent[id(self.resolve(t))]

    def ancestors(self, t: TreeNode) -> list[TreeNode]:
        """``t`` itself followed by its ancestors up to the root."""
        out = [self.resolve(t)]
        while (p := self._parent[id(out[-1])]) is not None:
            out.append(p)
        return out

    def subtree(self, t: TreeNode) -> "HierarchyTree":
        """The subtree rooted at ``t`` as a tree of its own (v not renormalised)."""
        return HierarchyTree(self.resolve(t), self.r)


def classify(t: TreeNode, r: int) -> Criticality:
    """Compare the weight exponent against ``1/r`` exactly."""
    threshold = Fraction(1, r)
    if t.exponent > threshold:
        return Criticality.SUBCRITICAL
    if t.exponent == threshold:
        return Criticality.CRITICAL
    return Criticality.SUPERCRITICAL


def density(t: TreeNode, r: int) -> DensityValue:
    """``w(t) * (v(t) n)**(1/r)`` as ``(c * v**(1/r), 1/r - a)``."""
    if not t.is_leaf:
        raise ValueError(f"density is defined on leaves; {t.id!r} has children")
    return DensityValue(Fraction(1, r) - t.exponent, t.coeff * t.v ** (1.0 / r))


def densest_leaf(root: TreeNode, r: int) -> TreeNode:
    """First leaf (pre-order) attaining the maximal density."""
    best = None
    for leaf in root.leaves():
        if best is None or density(leaf, r) > density(best, r):
            best = leaf
    return best


def dense_threshold(r: int) -> Fraction:
    """Exponent ``1 + 1/r``: weights below it (in exponent) are omega(n^-(1+1/r))."""
    return 1 + Fraction(1, r)


def in_regime_gap(a: Fraction, r: int) -> bool:
    return dense_threshold(r) <= a <= 2


def validate(tree: HierarchyTree) -> list[str]:
    """Every violated structural assumption, as human-readable strings."""
    problems: list[str] = []
    r = tree.r
    if not isinstance(r, int) or r < 2:
        problems.append(f"threshold r must be an integer >= 2, got {r!r}")
        r = 2
    seen: set[str] = set()
    for t in tree.root.walk():
        if t.id in seen:
            problems.append(f"duplicate node id {t.id!r}")
        seen.add(t.id)
        if not (math.isfinite(t.coeff) and t.coeff > 0):
            problems.append(f"node {t.id!r}: coefficient must be positive and finite, got {t.coeff}")
        if t.exponent < 0:
            problems.append(f"node {t.id!r}: exponent must be non-negative, got {t.exponent}")
        for c in t.children:
            if not t.exponent > c.exponent:
                problems.append(
                    f"proper separation violated: parent {t.id!r} (a={t.exponent}) "
                    f"must have a larger exponent than child {c.id!r} (a={c.exponent})"
                )
        if t.is_leaf:
            if t.leaf_v is None or not math.isfinite(t.leaf_v):
                problems.append(f"leaf {t.id!r}: missing vertex fraction v")
            elif t.leaf_v <= 0:
                problems.append(f"leaf {t.id!r}: vertex fraction must be > 0, got {t.leaf_v}")
            elif t.leaf_v > 1:
                problems.append(f"leaf {t.id!r}: vertex fraction must be <= 1, got {t.leaf_v}")
        elif t.leaf_v is not None and abs(t.leaf_v - t.v) > V_SUM_TOL:
            problems.append(f"node {t.id!r}: stated v={t.leaf_v} differs from sum over children {t.v}")
        if in_regime_gap(t.exponent, r):
            problems.append(
                f"regime-gap node {t.id!r}: exponent {t.exponent} lies in "
                f"[{dense_threshold(r)}, 2] where the allocation algorithm is not proven"
            )
    total = math.fsum(leaf.leaf_v for leaf in tree.leaves() if leaf.leaf_v is not None)
    if abs(total - 1.0) > V_SUM_TOL:
        problems.append(f"leaf vertex fractions sum to {total}, expected 1")
    return problems


def regime_gap_nodes(tree: HierarchyTree) -> list[TreeNode]:
    return [t for t in tree.root.walk() if in_regime_gap(t.exponent, tree.r)]


def maximal_dense_subtrees(tree: HierarchyTree) -> list[TreeNode]:
    """Roots of the maximal dense subtrees, in pre-order."""
    gap = regime_gap_nodes(tree)
    if gap:
        names = ", ".join(f"{t.id!r} (a={t.exponent})" for t in gap)
        raise ValueError(f"regime-gap nodes present: {names}")
    cut = dense_threshold(tree.r)
    out: list[TreeNode] = []

    def visit(t: TreeNode):
        if t.exponent < cut:
            out.append(t)
            return
        for c in t.children:
            visit(c)

    visit(tree.root)
    return out


def lca(t1, t2, tree: HierarchyTree) -> TreeNode:
    a1 = tree.ancestors(t1)
    on_path = {id(t) for t in tree.ancestors(t2)}
    for t in a1:
        if id(t) in on_path:
            return t
    raise AssertionError("nodes of one tree always share the root")


def lca_weight(t1, t2, tree: HierarchyTree) -> PowerLawWeight:
    return lca(t1, t2, tree).weight


def is_vulnerable(leaf: TreeNode, tree: HierarchyTree, r: int | None = None) -> bool:
    """Whether a subcritical leaf reaches a (super)critical leaf through an
    ancestor of weight Omega(1/n), i.e. exponent <= 1."""
    r = tree.r if r is None else r
    leaf = tree.resolve(leaf)
    if not leaf.is_leaf or classify(leaf, r) is not Criticality.SUBCRITICAL:
        raise ValueError(f"{leaf.id!r} is not a subcritical leaf")
    for other in tree.leaves():
        if other is leaf or classify(other, r) is Criticality.SUBCRITICAL:
            continue
        if lca(leaf, other, tree).exponent <= 1:
            return True
    return False


def activatable_fraction(tree: HierarchyTree, r: int | None = None) -> float:
    """Total v over critical, supercritical and vulnerable subcritical leaves."""
    r = tree.r if r is None else r
    total = []
    for leaf in tree.leaves():
        if classify(leaf, r) is not Criticality.SUBCRITICAL or is_vulnerable(leaf, tree, r):
            total.append(leaf.v)
    return math.fsum(total)
