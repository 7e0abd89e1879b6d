"""``treeopt`` command line.

Exit codes: 0 ok, 1 usage or input error, 2 size guard hit or infeasible
instance, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ConfigError, load_config, run_bench, write_csv
from .certificates import InconsistentBounds
from .convex import SolverOptions
from .graph import CandidateSet, GraphError, WeightedGraph, read_edge_list
from .linalg import NotPositiveDefinite
from .oracle import GuardExceeded, enumerate_spanning_trees, exhaustive_esp
from .runs import METHODS, InfeasibleInstance, RunResult, run_dual, run_sparsify, run_synth
from .treeconn import log_tree_count

log = logging.getLogger("treeopt")

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which we reserve for guards
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_graph(path: str) -> WeightedGraph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    g, diag = read_edge_list(text)
    if diag.parallel_merged:
        log.warning("%s: merged %d parallel edge(s)", path, diag.parallel_merged)
    return g


def _read_candidates(path: str, n: int, origin: str = "addition") -> CandidateSet:
    g = _read_graph(path)
    if g.n != n:
        raise UsageError(f"{path}: vertex count {g.n} differs from the graph's {n}")
    return CandidateSet.from_graph(g, origin)


def _methods(spec: str) -> tuple[str, ...]:
    out = tuple(dict.fromkeys(s.strip() for s in spec.split(",") if s.strip()))
    bad = [m for m in out if m not in METHODS]
    if not out or bad:
        raise UsageError(f"--method takes a comma list from {', '.join(METHODS)}; got {spec!r}")
    return out


def _solver_opts(args) -> SolverOptions:
    if args.tol <= 0 or args.max_iters < 1:
        raise UsageError("--tol must be positive and --max-iters at least 1")
    return SolverOptions(tol=args.tol, max_iters=args.max_iters)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _summary(res: RunResult) -> str:
    d = res.to_dict()
    fields = ["status=" + d["status"]]
    for key in ("tau_final", "lower", "upper", "gap"):
        if d.get(key) is not None:
            fields.append(f"{key}={d[key]:.6g}")
    return " ".join(fields)


def cmd_synth(args) -> int:
    base = _read_graph(args.graph)
    if args.complete_complement:
        if args.candidates:
            raise UsageError("give either --candidates or --complete-complement")
        cands = CandidateSet.complement(base)
    elif args.candidates:
        cands = _read_candidates(args.candidates, base.n)
    else:
        raise UsageError("need --candidates or --complete-complement")
    res = run_synth(
        base,
        cands,
        args.k,
        _methods(args.method),
        _solver_opts(args),
        seed=args.seed,
        repair=args.repair,
        max_nodes=args.max_nodes,
        timing=args.timing,
    )
    _emit(res.to_json(), args.out)
    log.info("%s", _summary(res))
    return EXIT_OK


def cmd_sparsify(args) -> int:
    g = _read_graph(args.graph)
    removable = (
        _read_candidates(args.removable, g.n, "deletion-transformed")
        if args.removable
        else CandidateSet.from_graph(g, "deletion-transformed")
    )
    res = run_sparsify(
        g,
        removable,
        args.k,
        _methods(args.method),
        _solver_opts(args),
        seed=args.seed,
        max_nodes=args.max_nodes,
        timing=args.timing,
    )
    _emit(res.to_json(), args.out)
    log.info("%s", _summary(res))
    return EXIT_OK


def cmd_dual(args) -> int:
    base = _read_graph(args.graph)
    cands = (
        CandidateSet.complement(base)
        if args.complete_complement
        else _read_candidates(args.candidates, base.n)
    )
    if not math.isfinite(args.delta) or (args.delta < 0 and not args.absolute_delta):
        raise UsageError("--delta must be a finite non-negative gain")
    res = run_dual(
        base,
        cands,
        args.delta,
        _methods(args.method),
        _solver_opts(args),
        absolute_delta=args.absolute_delta,
        timing=args.timing,
    )
    _emit(res.to_json(), args.out)
    log.info("%s", _summary(res))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.config}: {exc.strerror}") from exc
    cfg = load_config(text)
    if args.weights:
        cfg = dataclasses.replace(cfg, weights=args.weights)
    rows = run_bench(cfg, timing=args.timing, jobs=args.jobs)
    _emit(write_csv(rows), args.out_csv)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(rows, args.figure)
        log.info("figure written to %s", args.figure)
    log.info("%d rows over %d instances", len(rows), len(cfg.cells()))
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = _read_graph(args.graph)
    lines = [f"tau\t{log_tree_count(g)!r}"]
    trees = enumerate_spanning_trees(g)
    lines.append(f"trees\t{len(trees.trees)}")
    lines.append(f"weighted_total\t{trees.total!r}")
    if args.candidates:
        if args.k is None:
            raise UsageError("oracle with --candidates needs -k")
        cands = _read_candidates(args.candidates, g.n)
        opt, sub = exhaustive_esp(g, cands, args.k)
        lines.append(f"opt\t{opt!r}")
        lines.append("opt_set\t" + ",".join(map(str, sub)))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _solver_flags(p) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--tol", type=float, default=1e-6, help="stationarity tolerance (default 1e-6)")
    g.add_argument("--max-iters", type=int, default=2000, help="projected-gradient iterations (default 2000)")
    g.add_argument("--timing", action="store_true", help="record wall times (output no longer reproducible)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="treeopt", description="Design graphs with many spanning trees.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="add k edges to a base graph")
    p.add_argument("--graph", required=True, help="base graph edge list")
    p.add_argument("--candidates", help="candidate edge list")
    p.add_argument("--complete-complement", action="store_true", help="candidates = every missing pair, unit weight")
    p.add_argument("-k", type=int, required=True, help="edges to add")
    p.add_argument("--method", default="greedy,convex", help="comma list of greedy,convex,exact,random")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized rounding")
    p.add_argument("--repair", action="store_true", help="fix randomized rounding up to exactly k edges")
    p.add_argument("--max-nodes", type=int, default=10**6, help="node guard for the exact method")
    p.add_argument("--out", help="JSON output path (default stdout)")
    _solver_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sparsify", help="remove k edges keeping many spanning trees")
    p.add_argument("--graph", required=True)
    p.add_argument("--removable", help="edges that may be removed (default: all)")
    p.add_argument("-k", type=int, required=True, help="edges to remove")
    p.add_argument("--method", default="greedy,convex")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-nodes", type=int, default=10**6)
    p.add_argument("--out")
    _solver_flags(p)
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("dual", help="fewest edges reaching a tree-connectivity gain")
    p.add_argument("--graph", required=True)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--candidates")
    grp.add_argument("--complete-complement", action="store_true")
    p.add_argument("--delta", type=float, required=True, help="required gain in nats")
    p.add_argument("--absolute-delta", action="store_true", help="treat --delta as a target log tree count")
    p.add_argument("--method", default="greedy,convex", help="comma list of greedy,convex,exact")
    p.add_argument("--out")
    _solver_flags(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("bench", help="random sweep to CSV")
    p.add_argument("--config", required=True, help="TOML sweep description")
    p.add_argument("--out-csv", help="CSV output path (default stdout)")
    p.add_argument("--figure", help="also render mean curves to this image file")
    p.add_argument("--weights", help="override the config's weights: unit or lognormal:SIGMA")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output is unchanged)")
    p.add_argument("--timing", action="store_true", help="fill time_ms (output no longer reproducible)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="brute-force tree count and small-instance optimum")
    p.add_argument("--graph", required=True)
    p.add_argument("--candidates")
    p.add_argument("-k", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
    )
    if args.command == "dual" and "random" in args.method:
        print("treeopt: error: dual has no random method", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except InfeasibleInstance as exc:
        if exc.record is not None and getattr(args, "out", None) not in (None, "-"):
            Path(args.out).write_text(exc.record.to_json())
        print(f"treeopt: infeasible: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except GuardExceeded as exc:
        print(f"treeopt: guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (NotPositiveDefinite, InconsistentBounds, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"treeopt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigError, GraphError, ValueError) as exc:
        print(f"treeopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
