import io
import math

import numpy as np
import pytest

from hiercontagion import optimizer as opt
from hiercontagion.cascade import SeedAllocation
from hiercontagion.model import HierarchyTree, maximal_dense_subtrees, node

from oracles import enumerate_allocations, tie_break

Q_2_1_2 = 0.42436830099781236       # Pr(hit) for k=2, c=1, r=2 (tests/oracles.py)
SMALL_WALK = opt.WalkConfig(trials=100_000, seed=3)


def two_subtrees():
    """Upper part of exponent 5/2 over a supercritical and a critical leaf."""
    return HierarchyTree(node("root", 1, "5/2", children=[node("S", 1, "2/5", v=0.5),
                                                         node("C", 1, "1/2", v=0.5)]), 2)


def critical_pair():
    return HierarchyTree(node("root", 1, "9/8", children=[node("A", 1, "1/2", v=0.5),
                                                         node("B", 0.8, "1/2", v=0.5)]), 2)


class TestDP:
    def test_worked_example(self):
        value, split, _ = opt.dp_over_tables([[0, 0, .2, .5], [0, 0, .4, .45]])
        assert split == (3, 0) and value == 0.5

    def test_single_subtree(self):
        h = [[0, 0.1, 0.3, 0.35]]
        value, split, _ = opt.dp_over_tables(h)
        assert split == (3,) and value == 0.35

    def test_random_tables_against_enumeration(self):
        rng = np.random.default_rng(0)
        for trial in range(100):
            m = int(rng.integers(1, 5))
            K = int(rng.integers(0, 7))
            # coarse grid values so that ties actually occur
            h = np.sort(rng.integers(0, 5, size=(m, K + 1)) / 4, axis=1)
            value, split, H = opt.dp_over_tables(h)
            best, splits = enumerate_allocations(h.tolist())
            assert value == best
            assert split == tie_break(splits)
            assert H[-1, -1] == best

    def test_bad_table(self):
        with pytest.raises(ValueError):
            opt.dp_over_tables(np.zeros(3))

    def test_compositions(self):
        assert list(opt.compositions(2, 2)) == [(0, 2), (1, 1), (2, 0)]
        for K, L in [(4, 3), (0, 2), (5, 1)]:
            comps = list(opt.compositions(K, L))
            assert len(comps) == len(set(comps)) == opt.n_compositions(K, L)
            assert all(sum(c) == K and len(c) == L for c in comps)


class TestHValues:
    def test_supercritical_subtree(self):
        tree = two_subtrees()
        S = maximal_dense_subtrees(tree)[0]
        assert opt.h_theoretical(S, 2, 2) == 0.5
        assert opt.h_theoretical(S, 1, 2) == 0.0

    def test_below_threshold(self):
        leaf = node("L", 1, "1/2", v=1.0)
        assert opt.h_theoretical(leaf, 1, 2) == 0.0
        assert opt.h_theoretical(node("L", 1, "1/3", v=1.0), 2, 3) == 0.0

    def test_critical_leaf(self):
        leaf = node("L", 1, "1/2", v=1.0)
        vals, se = opt.h_theoretical_row(leaf, 2, 2, SMALL_WALK)
        assert abs(vals[2] - (1 - Q_2_1_2)) < 3 * se[2]

    def test_subcritical_star(self):
        assert opt.h_theoretical(node("L", 1, "2/3", v=1.0), 5, 2) == 0.0

    def test_vulnerable_leaves_counted(self):
        sub = node("P", 1, "3/4", children=[node("s", 1, "2/3", v=0.3), node("x", 1, "1/3", v=0.2)])
        assert opt.h_theoretical(sub, 2, 2) == pytest.approx(0.5)

    def test_table_invariants(self):
        tree = two_subtrees()
        tab = opt.build_h_table(tree, 5, walk_config=SMALL_WALK)
        assert tab.values.shape == (2, 6)
        assert (tab.values[:, :2] == 0).all()
        assert (np.diff(tab.values, axis=1) >= 0).all()
        assert (tab.provenance == "theoretical").all()
        tab.check(2)
        buf = io.StringIO()
        tab.write_csv(buf)
        assert buf.getvalue().splitlines()[0] == "subtree,k,h,se,provenance"

    def test_check_rejects_bad_tables(self):
        roots = (node("L", 1, "1/2", v=0.5),)
        bad = opt.HValueTable(roots, np.array([[0, 0, 0.4, 0.3]]), np.full((1, 4), "x"), np.zeros((1, 4)))
        with pytest.raises(ValueError, match="nondecreasing"):
            bad.check()
        big = opt.HValueTable(roots, np.array([[0, 0, 0.6, 0.6]]), np.full((1, 4), "x"), np.zeros((1, 4)))
        with pytest.raises(ValueError, match="exceed"):
            big.check()

    def test_monte_carlo_mode(self):
        tree = two_subtrees()
        tab = opt.build_h_table(tree, 3, mode="monte-carlo", n=2000, trials=20, seed=1)
        assert (tab.provenance == "monte-carlo").all()
        assert (np.diff(tab.values, axis=1) >= 0).all()
        assert tab.values[0, 2] == pytest.approx(0.5, abs=0.01)   # supercritical subtree
        assert tab.values[0, 1] == pytest.approx(1 / 2000)

    def test_monte_carlo_needs_n(self):
        with pytest.raises(ValueError):
            opt.build_h_table(two_subtrees(), 3, mode="monte-carlo")


class TestAllocate:
    def test_all_on_densest_leaf(self):
        tree = critical_pair()
        tab = opt.build_h_table(tree, 4, walk_config=SMALL_WALK)
        res = opt.dp_allocate(tree, 4, 2, tab)
        assert res.allocation.counts == {"A": 4, "B": 0}
        assert res.value == tab.values[0, 4] and res.method == "dp"

    def test_supercritical_subtree_wins(self):
        tree = two_subtrees()
        res = opt.dp_allocate(tree, 4, 2, opt.build_h_table(tree, 4, walk_config=SMALL_WALK))
        # 2 seeds saturate S; the other 2 go to C
        assert res.allocation.counts == {"S": 2, "C": 2}
        assert 0.5 < res.value < 1

    def test_dimension_mismatch(self):
        tree = two_subtrees()
        tab = opt.build_h_table(tree, 3, walk_config=SMALL_WALK)
        with pytest.raises(ValueError):
            opt.dp_allocate(tree, 4, 2, tab)
        with pytest.raises(ValueError):
            opt.dp_allocate(critical_pair(), 3, 2, tab)


class TestSigma:
    def test_zero_and_all_seeds(self):
        tree = critical_pair()
        assert opt.estimate_sigma(tree, 100, SeedAllocation({}), trials=3).value == 0.0
        full = opt.estimate_sigma(tree, 100, SeedAllocation({"A": 50, "B": 50}), trials=3)
        assert full.value == 1.0 and full.uncertainty == 0.0

    def test_supercritical(self):
        tree = HierarchyTree(node("L", 1, "2/5", v=1.0))
        res = opt.estimate_sigma(tree, 10**4, SeedAllocation({"L": 2}), trials=200, seed=2)
        assert res.value >= 0.99 - 3 * res.uncertainty
        assert res.activation["L"] >= 0.99

    def test_subcritical(self):
        n = 10**4
        tree = HierarchyTree(node("L", 1, "7/10", v=1.0))
        res = opt.estimate_sigma(tree, n, SeedAllocation({"L": 5}), trials=200, seed=2)
        assert np.mean(res.samples <= 10 / n) >= 0.95

    def test_infeasible(self):
        with pytest.raises(ValueError):
            opt.estimate_sigma(critical_pair(), 10, SeedAllocation({"A": 6}), trials=1)
        with pytest.raises(KeyError):
            opt.estimate_sigma(critical_pair(), 10, SeedAllocation({"Z": 1}), trials=1)


class TestBruteForce:
    def test_enumerates_three(self):
        rk = opt.brute_force_allocate(critical_pair(), 2, 2, 400, 5, seed=1)
        labels = {r.allocation.label(rk.leaf_ids) for r in rk}
        assert labels == {"2|0", "1|1", "0|2"}
        vals = [r.value for r in rk]
        assert vals == sorted(vals, reverse=True)

    def test_below_threshold_ties(self):
        rk = opt.brute_force_allocate(critical_pair(), 1, 2, 400, 5, seed=1)
        assert all(r.value == 1 / 400 for r in rk)

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            opt.brute_force_allocate(critical_pair(), 200, 2, 1000, 1, cap=100)

    def test_common_graphs_independent_of_order(self):
        tree = critical_pair()
        rk = opt.brute_force_allocate(tree, 3, 2, 600, 8, seed=4)
        for res in rk:
            alone = opt.estimate_sigma(tree, 600, res.allocation, trials=8, seed=4)
            assert np.array_equal(alone.samples, res.samples)

    def test_paired_difference_and_csv(self):
        rk = opt.brute_force_allocate(critical_pair(), 2, 2, 400, 6, seed=1)
        d, se = rk.paired_difference(0, 0)
        assert d == 0 and se == 0
        buf = io.StringIO()
        rk.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "allocation,mean,se,rank" and lines[1].endswith(",1")


class TestSubmodular:
    def test_giant_fraction(self):
        assert opt.giant_fraction(0.9) == 0.0
        g = opt.giant_fraction(2.0)
        assert g == pytest.approx(1 - math.exp(-2 * g)) and g == pytest.approx(0.7968, abs=1e-4)

    def test_tree_shape(self):
        t = opt.submodular_tree(3, 2)
        assert str(t.root.exponent) == "5/4" and len(t.leaves()) == 3
        assert maximal_dense_subtrees(t) == [t.root]

    def test_no_edges(self):
        with pytest.warns(UserWarning):
            rep = opt.submodular_demo(3, 2, 3000, 3, keep_prob=0.0)
        assert rep.spread_mean == rep.concentrated_mean == 3

    def test_single_seed(self):
        rep = opt.submodular_demo(1, 2, 20_000, 5, seed=2)
        assert rep.spread_mean == rep.concentrated_mean and rep.diff_se == 0

    def test_spread_beats_concentrated(self):
        rep = opt.submodular_demo(3, 2, 10**5, 40, seed=5)
        assert rep.leaf_mean_degree > 1
        assert rep.spread_wins
        assert rep.oracle_spread > 1.5 * rep.oracle_concentrated
