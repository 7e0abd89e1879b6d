"""Random instance generation and the benchmark sweep behind ``treeopt bench``."""

from __future__ import annotations

import csv
import heapq
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import convex as cvx
from .certificates import ZETA
from .graph import CandidateSet, Edge, WeightedGraph
from .runs import METHODS, run_synth

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_weight_spec",
    "prufer_tree",
    "random_connected_graph",
    "instance_rows",
    "run_bench",
    "write_csv",
    "read_csv",
]

CSV_COLUMNS = ("n", "m", "k", "trial", "method", "tau", "lower", "upper", "time_ms")


class ConfigError(ValueError):
    pass


def _as_tuple(x, name: str) -> tuple[int, ...]:
    if isinstance(x, dict):
        try:
            return tuple(range(int(x["start"]), int(x["stop"]) + 1, int(x.get("step", 1))))
        except KeyError as exc:
            raise ConfigError(f"{name} range needs start and stop") from exc
    if isinstance(x, (list, tuple)):
        vals = tuple(x)
    else:
        vals = (x,)
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in vals):
        raise ConfigError(f"{name} must be integers, got {x!r}")
    return vals


def parse_weight_spec(spec: str) -> tuple[str, float]:
    """``"unit"`` or ``"lognormal:SIGMA"``."""
    if spec == "unit":
        return "unit", 0.0
    kind, _, arg = spec.partition(":")
    if kind == "lognormal":
        try:
            sigma = float(arg)
        except ValueError:
            sigma = -1.0
        if sigma >= 0 and math.isfinite(sigma):
            return kind, sigma
    raise ConfigError(f"bad weight spec {spec!r}; use unit or lognormal:SIGMA")


@dataclass(frozen=True)
class ExperimentConfig:
    n: tuple[int, ...]
    m: tuple[int, ...]
    k: tuple[int, ...]
    trials: int
    seed: int = 0
    methods: tuple[str, ...] = ("greedy", "convex")
    weights: str = "unit"
    tol: float = 1e-6
    max_iters: int = 2000
    max_nodes: int = 10**6
    repair: bool = False

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}")
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        for n in self.n:
            if n < 2:
                raise ConfigError(f"n={n} < 2")
            for m in self.m:
                if not n - 1 <= m <= n * (n - 1) // 2:
                    raise ConfigError(f"m={m} outside [n-1, n(n-1)/2] for n={n}")
                for k in self.k:
                    if not 0 <= k <= n * (n - 1) // 2 - m:
                        raise ConfigError(f"k={k} exceeds the {n * (n - 1) // 2 - m} free pairs")
        parse_weight_spec(self.weights)

    def cells(self) -> list[tuple[int, int, int, int]]:
        return [
            (n, m, k, t)
            for n, m, k in itertools.product(self.n, self.m, self.k)
            for t in range(self.trials)
        ]

    def solver_options(self) -> cvx.SolverOptions:
        return cvx.SolverOptions(tol=self.tol, max_iters=self.max_iters)


def load_config(text: str) -> ExperimentConfig:
    """Parse a TOML sweep description; ``n``, ``m``, ``k`` may be lists or ranges."""
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: {exc}") from exc
    known = {"n", "m", "k", "trials", "seed", "methods", "weights", "solver", "max_nodes", "repair"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    for key in ("n", "m", "k", "trials"):
        if key not in d:
            raise ConfigError(f"config is missing {key!r}")
    solver = d.get("solver", {})
    try:
        return ExperimentConfig(
            n=_as_tuple(d["n"], "n"),
            m=_as_tuple(d["m"], "m"),
            k=_as_tuple(d["k"], "k"),
            trials=int(d["trials"]),
            seed=int(d.get("seed", 0)),
            methods=tuple(d.get("methods", ("greedy", "convex"))),
            weights=str(d.get("weights", "unit")),
            tol=float(solver.get("tol", 1e-6)),
            max_iters=int(solver.get("max_iters", 2000)),
            max_nodes=int(d.get("max_nodes", 10**6)),
            repair=bool(d.get("repair", False)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from exc


def prufer_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random labelled tree on ``n`` vertices via a Prüfer sequence."""
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def random_connected_graph(
    n: int, m: int, rng: np.random.Generator, weights: str = "unit"
) -> WeightedGraph:
    """Random tree plus ``m - n + 1`` extra edges drawn uniformly from the free pairs."""
    if not n - 1 <= m <= n * (n - 1) // 2:
        raise ValueError(f"m={m} outside [{n - 1}, {n * (n - 1) // 2}]")
    tree = prufer_tree(n, rng)
    used = set(tree)
    free = [p for p in itertools.combinations(range(n), 2) if p not in used]
    extra = rng.choice(len(free), size=m - len(tree), replace=False) if m > len(tree) else []
    pairs = sorted(tree + [free[i] for i in sorted(extra)])
    kind, sigma = parse_weight_spec(weights)
    if kind == "unit":
        w = np.ones(len(pairs))
    else:
        w = rng.lognormal(0.0, sigma, size=len(pairs))
    return WeightedGraph(n, tuple(Edge(u, v, float(x)) for (u, v), x in zip(pairs, w)))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return repr(float(x))


def instance_rows(cfg: ExperimentConfig, cell: tuple[int, int, int, int], timing: bool = False) -> list[dict]:
    """Generate one instance and return its CSV rows.

    Rows: ``init`` (base graph), one per method, and ``certificate`` (the
    combined bracket on the optimum).
    """
    n, m, k, trial = cell
    rng = np.random.default_rng(cfg.seed + trial)
    base = random_connected_graph(n, m, rng, cfg.weights)
    cands = CandidateSet.complement(base)
    res = run_synth(
        base,
        cands,
        k,
        cfg.methods,
        cfg.solver_options(),
        seed=cfg.seed + trial,
        repair=cfg.repair,
        max_nodes=cfg.max_nodes,
        timing=timing,
        command="bench",
    )
    key = {"n": n, "m": m, "k": k, "trial": trial}
    tau_init = res.instance["tau_init"]
    meth = res.methods
    rows = [dict(key, method="init", tau=tau_init, lower=tau_init, upper=None, time_ms=None)]
    for name in METHODS:
        if name not in cfg.methods:
            continue
        rec = meth[name]
        lo, up = rec["tau_final"], None
        if name == "greedy":
            up = ZETA * rec["tau_final"] + (1.0 - ZETA) * tau_init
        elif name == "convex":
            up = rec["upper_bound"]
        elif name == "exact":
            up = rec["tau_final"]
        rows.append(dict(key, method=name, tau=rec["tau_final"], lower=lo, upper=up, time_ms=rec["time_ms"]))
    cert = res.certificate
    rows.append(dict(key, method="certificate", tau=None, lower=cert["lower"], upper=cert["upper"], time_ms=None))
    return rows


def _worker(args):
    cfg, cell, timing = args
    return instance_rows(cfg, cell, timing)


def run_bench(cfg: ExperimentConfig, timing: bool = False, jobs: int = 1) -> list[dict]:
    """All rows of a sweep in cell order; ``jobs > 1`` runs cells in processes."""
    cells = cfg.cells()
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_worker, [(cfg, c, timing) for c in cells]))
    else:
        chunks = [instance_rows(cfg, c, timing) for c in cells]
    return [r for chunk in chunks for r in chunk]


def write_csv(rows: Iterable[dict], out=None) -> str:
    """Render rows as CSV; floats use ``repr`` so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(
            [r["n"], r["m"], r["k"], r["trial"], r["method"]]
            + [_fmt(r[c]) for c in ("tau", "lower", "upper", "time_ms")]
        )
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        row: dict = {c: int(r[c]) for c in ("n", "m", "k", "trial")}
        row["method"] = r["method"]
        for c in ("tau", "lower", "upper", "time_ms"):
            row[c] = float(r[c]) if r[c] else None
        rows.append(row)
    return rows
