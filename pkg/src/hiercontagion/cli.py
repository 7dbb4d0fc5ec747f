"""Command-line interface: ``hiercontagion <command> [options]``.

Every command writes a first line ``# hiercontagion <command> key=value ...``
listing all parameters, followed by CSV (or plain ``key: value`` lines for
``optimize`` and ``validate``).  Exit codes: 0 success, 1 validation failure
(bad tree, failed invariant), 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
from pathlib import Path
from typing import Sequence, TextIO

from . import optimizer, rng, walk
from .cascade import DEFAULT_THETA, SeedAllocation, place_seeds, run_r_complex
from .model import HierarchyTree, densest_leaf, maximal_dense_subtrees, validate
from .sampler import sample_gnp, sample_graph
from .treespec import TreeSpecError, load_tree

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    if isinstance(x, (list, tuple)):
        return ",".join(_fmt(v) for v in x)
    return str(x)


def _header(out: TextIO, args: argparse.Namespace) -> None:
    skip = {"command", "func", "output"}
    items = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(vars(args).items()) if k not in skip)
    out.write(f"# hiercontagion {args.command} {items}\n")


def _positive(kind):
    def conv(text):
        try:
            x = kind(float(text)) if kind is int else kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if kind is int and float(text) != x:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        if not x > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return x
    conv.__name__ = f"positive {kind.__name__}"
    return conv


def _nonneg_int(text):
    try:
        x = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if x < 0 or float(text) != x:
        raise argparse.ArgumentTypeError(f"must be a non-negative integer: {text!r}")
    return x


pos_int = _positive(int)
pos_float = _positive(float)


def _tree(args) -> HierarchyTree:
    if args.tree is None:
        raise UsageError("this command needs --tree")
    if not Path(args.tree).exists():
        raise UsageError(f"tree file not found: {args.tree}")
    try:
        tree = load_tree(args.tree, args.r)
    except TreeSpecError as exc:
        raise ValidationFailure(str(exc)) from exc
    problems = validate(tree)
    if problems:
        raise ValidationFailure("\n".join(problems))
    return tree


def _allocation(text: str | None, tree: HierarchyTree | None) -> SeedAllocation:
    """``"A=2,B=1"`` or a bare ``"2|1"`` vector over the leaves."""
    if not text:
        return SeedAllocation({})
    if "=" in text:
        counts = {}
        for part in text.split(","):
            key, _, val = part.partition("=")
            counts[key.strip()] = _nonneg_int(val)
        return SeedAllocation(counts)
    if tree is None:
        raise UsageError("a '|' allocation vector needs --tree")
    leaf_ids = [t.id for t in tree.leaves()]
    vec = [_nonneg_int(x) for x in text.split("|")]
    if len(vec) != len(leaf_ids):
        raise UsageError(f"allocation has {len(vec)} entries, tree has {len(leaf_ids)} leaves")
    return SeedAllocation.from_vector(leaf_ids, vec)


# --------------------------------------------------------------------------
# commands

def cmd_validate(args, out):
    try:
        tree = load_tree(args.tree_file, args.r)
    except TreeSpecError as exc:
        raise ValidationFailure(str(exc)) from exc
    problems = validate(tree)
    for p in problems:
        out.write(f"violation: {p}\n")
    if problems:
        return EXIT_INVALID
    out.write("valid\n")
    return EXIT_OK


def _graph(args, tree):
    if tree is not None:
        return sample_graph(tree, args.n, args.seed, args.threads)
    if args.p is None:
        raise UsageError("give --tree or --p")
    return sample_gnp(args.n, args.p, args.seed)


def cmd_sample(args, out):
    tree = _tree(args) if args.tree else None
    _graph(args, tree).write_edgelist(out)
    return EXIT_OK


def cmd_cascade(args, out):
    tree = _tree(args) if args.tree else None
    g = _graph(args, tree)
    if tree is None:
        alloc = SeedAllocation({"root": args.k if args.k is not None else 0})
    else:
        alloc = _allocation(args.alloc, tree)
    res = run_r_complex(g, place_seeds(g, alloc), args.r, args.theta)
    out.write("leaf,size,seeds,infected,activated\n")
    for t, size in zip(g.leaf_ids, g.leaf_sizes):
        out.write(f"{t},{size},{alloc.counts.get(t, 0)},{res.infected_per_leaf[t]},"
                  f"{int(t in res.activated_leaves)}\n")
    out.write(f"TOTAL,{g.n},{alloc.total},{res.infected_total},{len(res.activated_leaves)}\n")
    out.write(f"# rounds={res.rounds}\n")
    return EXIT_OK


def cmd_zeta(args, out):
    if args.distribution:
        out.write("k,ell,probability\n")
        for k in args.k:
            dist = walk.hit_distribution(k, args.c, args.r, args.trials, args.max_iter,
                                         args.seed, args.threads)
            for ell, pr in dist.items():
                out.write(f"{k},{'inf' if math.isinf(ell) else int(ell)},{pr:.10g}\n")
        return EXIT_OK
    ests = []
    for k in args.k:
        if args.method == "tilted":
            ests.append(walk.estimate_hit_prob_tilted(k, args.c, args.r, args.trials,
                                                      args.max_iter, args.seed,
                                                      threads=args.threads))
        else:
            ests.append(walk.estimate_hit_prob(k, args.c, args.r, args.trials, args.max_iter,
                                               args.seed, args.threads))
    walk.write_estimates_csv(ests, out)
    return EXIT_OK


def cmd_logconcavity(args, out):
    rows, _ = walk.check_log_concavity(args.c, args.r, args.k_min, args.k_max, args.trials,
                                       args.max_iter, args.seed, args.method, args.threads)
    out.write("k,product,square,se,margin,verdict\n")
    for row in rows:
        out.write(f"{row.k},{row.product:.10g},{row.square:.10g},{row.se:.6g},"
                  f"{row.margin:.6g},{row.verdict}\n")
    return EXIT_INVALID if any(r.verdict == "violated" for r in rows) else EXIT_OK


def cmd_couple(args, out):
    ens = walk.coupled_ensemble(args.k, args.c, args.r, args.trials, args.max_iter, args.seed,
                                args.broken, args.threads)
    counts = ens.counts()
    out.write("quantity,value\n")
    for key, val in counts.items():
        out.write(f"{key},{val}\n")
    for walker in ("A", "B") if args.trials >= 10_000 else ():
        chk = walk.coupling_marginal_check(args.k, args.c, args.r, args.trials, args.max_iter,
                                           args.seed, walker, args.broken, args.threads)
        out.write(f"chi2_{walker},{chk.statistic:.6g}\npvalue_{walker},{chk.pvalue:.6g}\n")
    ok = counts["a_not_b"] == 0 and counts["symm_mismatch"] == 0
    return EXIT_OK if ok or args.broken else EXIT_INVALID


def _walk_config(args) -> optimizer.WalkConfig:
    return optimizer.WalkConfig(args.walk_trials, args.max_iter, args.seed, args.threads)


def cmd_htable(args, out):
    tree = _tree(args)
    if args.mode == "monte-carlo" and args.n is None:
        raise UsageError("--mode monte-carlo needs --n")
    table = optimizer.build_h_table(tree, args.K, args.r, args.mode, _walk_config(args),
                                    n=args.n, trials=args.trials, theta=args.theta,
                                    seed=args.seed)
    table.write_csv(out)
    return EXIT_OK


def cmd_optimize(args, out):
    tree = _tree(args)
    table = optimizer.build_h_table(tree, args.K, args.r, "theoretical", _walk_config(args))
    res = optimizer.dp_allocate(tree, args.K, args.r, table)
    roots = maximal_dense_subtrees(tree)
    for i, root in enumerate(roots):
        leaf = densest_leaf(root, args.r)
        out.write(f"subtree_{i}/leaf_{leaf.id}: {res.allocation.counts.get(leaf.id, 0)}\n")
    out.write(f"value: {res.value:.10g}\nse: {res.uncertainty:.6g}\n")
    if args.dp_trace:
        with open(args.dp_trace, "w") as fh:
            _header(fh, args)
            fh.write("subtree,k,H\n")
            for i, row in enumerate(res.dp_table):
                for k, h in enumerate(row):
                    fh.write(f"{i},{k},{h:.10g}\n")
    return EXIT_OK


def cmd_bruteforce(args, out):
    tree = _tree(args)
    ranking = optimizer.brute_force_allocate(tree, args.K, args.r, args.n, args.trials,
                                             args.seed, args.theta)
    ranking.write_csv(out)
    return EXIT_OK


def cmd_submodular(args, out):
    n = args.n if args.n is not None else (10**5 if args.fast else 10**6)
    rep = optimizer.submodular_demo(args.K, args.r, n, args.trials, args.seed, args.keep_prob,
                                    args.threads)
    out.write("quantity,value\n")
    for key in ("n", "keep_prob", "trials", "leaf_mean_degree", "spread_mean", "spread_se",
                "concentrated_mean", "concentrated_se", "diff_mean", "diff_se",
                "oracle_spread", "oracle_concentrated"):
        out.write(f"{key},{_fmt(getattr(rep, key))}\n")
    out.write(f"spread_wins,{int(rep.spread_wins)}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_nonneg_int, default=rng.DEFAULT_SEED,
                        help=f"master seed (default {rng.DEFAULT_SEED})")
    common.add_argument("--threads", type=pos_int, default=1)
    common.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    common.add_argument("--r", type=pos_int, default=2, help="infection threshold")

    p = argparse.ArgumentParser(prog="hiercontagion",
                                description="r-complex contagion on hierarchical blockmodels")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=func)
        return sp

    def graph_opts(sp):
        sp.add_argument("--tree")
        sp.add_argument("--n", type=pos_int, required=True)
        sp.add_argument("--p", type=float, help="Erdos-Renyi edge probability instead of --tree")

    def walk_opts(sp, trials):
        sp.add_argument("--c", type=pos_float, required=True)
        sp.add_argument("--trials", type=pos_int, default=trials)
        sp.add_argument("--max-iter", type=pos_int, default=walk.DEFAULT_MAX_ITER)

    sp = add("validate", cmd_validate, "check a tree file")
    sp.add_argument("tree_file")

    sp = add("sample", cmd_sample, "sample a graph, write its edge list")
    graph_opts(sp)

    sp = add("cascade", cmd_cascade, "run one r-complex cascade")
    graph_opts(sp)
    sp.add_argument("--alloc", help='seeds per leaf, "A=2,B=1" or "2|1"')
    sp.add_argument("--k", type=_nonneg_int, help="seed count for --p graphs")
    sp.add_argument("--theta", type=pos_float, default=DEFAULT_THETA)

    sp = add("zeta", cmd_zeta, "estimate walk hit probabilities")
    sp.add_argument("--k", type=pos_int, nargs="+", required=True)
    walk_opts(sp, 10**6)
    sp.add_argument("--method", choices=("plain", "tilted"), default="plain")
    sp.add_argument("--distribution", action="store_true", help="hit-iteration law instead")

    sp = add("logconcavity", cmd_logconcavity, "test log-concavity of hit probabilities in k")
    walk_opts(sp, 10**6)
    sp.add_argument("--k-min", type=pos_int, default=2)
    sp.add_argument("--k-max", type=pos_int, default=6)
    sp.add_argument("--method", choices=("plain", "tilted"), default="tilted")

    sp = add("couple", cmd_couple, "coupled walks A (k+2,k) and B (k+1,k+1)")
    sp.add_argument("--k", type=pos_int, required=True)
    walk_opts(sp, 10**6)
    sp.add_argument("--broken", action="store_true", help="mutation control")

    def tree_opts(sp):
        sp.add_argument("--tree", required=True)
        sp.add_argument("--K", type=_nonneg_int, required=True)
        sp.add_argument("--walk-trials", type=pos_int, default=200_000)
        sp.add_argument("--max-iter", type=pos_int, default=walk.DEFAULT_MAX_ITER)

    sp = add("htable", cmd_htable, "h-values per maximal dense subtree")
    tree_opts(sp)
    sp.add_argument("--mode", choices=("theoretical", "monte-carlo"), default="theoretical")
    sp.add_argument("--n", type=pos_int)
    sp.add_argument("--trials", type=pos_int, default=200)
    sp.add_argument("--theta", type=pos_float, default=DEFAULT_THETA)

    sp = add("optimize", cmd_optimize, "dynamic-programming seed allocation")
    tree_opts(sp)
    sp.add_argument("--dp-trace", help="write the full DP table to this CSV file")

    sp = add("bruteforce", cmd_bruteforce, "rank every allocation by Monte Carlo")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--K", type=_nonneg_int, required=True)
    sp.add_argument("--n", type=pos_int, required=True)
    sp.add_argument("--trials", type=pos_int, default=200)
    sp.add_argument("--theta", type=pos_float, default=DEFAULT_THETA)

    sp = add("submodular-demo", cmd_submodular, "independent cascade: spread vs concentrated")
    sp.add_argument("--K", type=pos_int, default=3)
    sp.add_argument("--n", type=pos_int)
    sp.add_argument("--trials", type=pos_int, default=200)
    sp.add_argument("--keep-prob", type=float)
    sp.add_argument("--fast", action="store_true", help="n = 10^5 unless --n is given")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        with contextlib.ExitStack() as stack:
            out = sys.stdout if args.output is None else stack.enter_context(
                open(args.output, "w"))
            _header(out, args)
            return args.func(args, out)
    except UsageError as exc:
        print(f"hiercontagion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailure as exc:
        print(f"hiercontagion: invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError) as exc:
        print(f"hiercontagion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
