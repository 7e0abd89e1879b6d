"""Single-instance pipelines behind the CLI, and their JSON record."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import convex as cvx
from .certificates import ZETA, assess_design, dual_bounds, esp_bounds
from .graph import (
    CandidateSet,
    GraphError,
    WeightedGraph,
    count_components,
    incidence_columns,
    is_connected,
    reduced_laplacian,
    transform_minus_to_plus,
)
from .greedy import greedy_dual_from_laplacian, greedy_from_laplacian
from .oracle import branch_and_bound_esp, exhaustive_dual, exhaustive_esp
from .treeconn import log_tree_count

__all__ = [
    "SCHEMA_VERSION",
    "METHODS",
    "RunResult",
    "Instance",
    "InfeasibleInstance",
    "run_synth",
    "run_sparsify",
    "run_dual",
]

SCHEMA_VERSION = 1
METHODS = ("greedy", "convex", "exact", "random")
# weight kept on removable edges so a split base graph still factors
REGULARIZATION = 1e-8
EXP_LIMIT = 700.0


class InfeasibleInstance(Exception):
    def __init__(self, message: str, record: "RunResult | None" = None):
        super().__init__(message)
        self.record = record


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


@dataclass
class RunResult:
    """JSON-serializable record of one CLI run (schema version 1)."""

    command: str
    instance: dict
    params: dict
    status: str = "ok"
    methods: dict = field(default_factory=dict)
    certificate: dict | None = None
    schema: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        out = {"schema": self.schema, "command": self.command, "status": self.status}
        out["instance"] = self.instance
        out.update(self.params)
        cert = self.certificate or {}
        for key in ("lower", "upper", "design_value", "gap", "ratio", "sources", "solver_status"):
            out[key] = cert.get(key)
        out["tau_final"] = cert.get("design_value")
        out["methods"] = self.methods
        out["params"] = self.params
        out["certificate"] = self.certificate
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        return cls(
            command=d["command"],
            instance=d["instance"],
            params=d["params"],
            status=d["status"],
            methods=d["methods"],
            certificate=d["certificate"],
            schema=d["schema"],
        )

    @classmethod
    def from_json(cls, text: str) -> "RunResult":
        return cls.from_dict(json.loads(text))


@dataclass
class Instance:
    """Base reduced Laplacian plus candidate columns, and the true objective.

    For a base graph that is split into pieces, every candidate also sits in
    ``L0`` with a tiny weight so the algorithms can run; designs are always
    scored on the unregularized graph.
    """

    base: WeightedGraph
    cands: CandidateSet
    L0: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    regularized: bool = False

    @classmethod
    def build(cls, base: WeightedGraph, cands: CandidateSet, eps: float = REGULARIZATION) -> "Instance":
        cands.check_disjoint(base)
        L0 = reduced_laplacian(base).matrix
        cols = incidence_columns(cands.edges, base.n)
        w = cands.weights
        if is_connected(base):
            return cls(base, cands, L0, cols, w)
        if count_components(base.n, [e.pair for e in base.edges] + [e.pair for e in cands]) != 1:
            raise GraphError("base graph plus all candidates is disconnected")
        L0 = L0 + (cols * (eps * w)) @ cols.T
        return cls(base, cands, L0, cols, (1.0 - eps) * w, regularized=True)

    def tau(self, chosen: Iterable[int]) -> float:
        return log_tree_count(self.base.with_edges(self.cands[i] for i in chosen))

    @property
    def tau_init(self) -> float:
        return log_tree_count(self.base)

    @property
    def model_tau_init(self) -> float:
        return cvx.Relaxation(self.L0, self.cols, self.weights).value(np.zeros(len(self.cands)))

    def relaxation(self) -> cvx.Relaxation:
        return cvx.Relaxation(self.L0, self.cols, self.weights)

    def edges(self, chosen: Iterable[int]) -> list:
        return [[self.cands[i].u, self.cands[i].v, self.cands[i].weight] for i in chosen]


def _safe_exp(tau: float) -> float | None:
    # t_w itself is only reported while it fits comfortably in a float
    return math.exp(tau) if tau < EXP_LIMIT else None


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = round(1e3 * (time.perf_counter() - self.t0), 3) if self.enabled else None


def _instance_info(inst: Instance) -> dict:
    return {"n": inst.base.n, "m": inst.base.m, "c": len(inst.cands), "tau_init": inst.tau_init}


def run_synth(
    base: WeightedGraph,
    cands: CandidateSet,
    k: int,
    methods: Sequence[str] = ("greedy", "convex"),
    opts: cvx.SolverOptions | None = None,
    seed: int = 0,
    repair: bool = False,
    max_nodes: int = 10**6,
    timing: bool = False,
    command: str = "synth",
    instance: Instance | None = None,
) -> RunResult:
    """Run the requested methods on one addition instance and certify them.

    Greedy always runs: its value anchors the certificate.
    """
    bad = set(methods) - set(METHODS)
    if bad:
        raise ValueError(f"unknown methods {sorted(bad)}")
    inst = instance or Instance.build(base, cands)
    if not 0 <= k <= len(cands):
        raise ValueError(f"k={k} outside [0, {len(cands)}]")
    opts = opts or cvx.SolverOptions()
    out: dict = {}
    model_init = inst.model_tau_init

    with _Clock(timing) as clk:
        gr = greedy_from_laplacian(inst.L0, inst.cols, inst.weights, k)
    tau_greedy = inst.tau(gr.chosen)
    out["greedy"] = {
        "chosen": list(gr.chosen),
        "edges": inst.edges(gr.chosen),
        "tau_final": tau_greedy,
        "gain_sequence": list(gr.gain_sequence),
        "time_ms": clk.ms,
    }

    sol = None
    if "convex" in methods or "random" in methods:
        with _Clock(timing) as clk:
            sol = cvx.solve_relaxation_on(inst.relaxation(), k, opts)
            chosen = cvx.round_topk(sol.pi_star, k)
        out["convex"] = {
            "chosen": chosen,
            "edges": inst.edges(chosen),
            "tau_final": inst.tau(chosen),
            "tau_star": sol.objective,
            "upper_bound": sol.upper_bound,
            "status": sol.status,
            "iterations": sol.iterations,
            "stationarity": sol.stationarity,
            "duality_gap": sol.duality_gap,
            "pi_star": sol.pi_star,
            "time_ms": clk.ms,
        }
    if "random" in methods:
        with _Clock(timing) as clk:
            chosen = cvx.round_randomized(sol.pi_star, seed, k=k, repair=repair)
        out["random"] = {
            "chosen": chosen,
            "edges": inst.edges(chosen),
            "tau_final": inst.tau(chosen),
            "seed": seed,
            "repair": repair,
            "time_ms": clk.ms,
        }
    if "exact" in methods:
        with _Clock(timing) as clk:
            if inst.regularized:
                opt, chosen = exhaustive_esp(inst.base, inst.cands, k)
            else:
                opt, chosen = branch_and_bound_esp(
                    inst.base, inst.cands, k, incumbent=tau_greedy, max_nodes=max_nodes
                )
        out["exact"] = {
            "chosen": list(chosen),
            "edges": inst.edges(chosen),
            "tau_final": opt,
            "time_ms": clk.ms,
        }

    cert = None
    if "convex" in methods:
        # greedy guarantee uses the model's own starting value
        cert = esp_bounds(
            model_init,
            gr.tau_final,
            out["convex"]["tau_final"],
            sol.upper_bound,
            cvx_source="relaxation" if sol.converged else "relaxation_envelope",
        )
    else:
        cert = esp_bounds(model_init, gr.tau_final, None, None)
    lower = max(tau_greedy, out.get("convex", {}).get("tau_final", -math.inf))
    cert_d = {
        "lower": lower,
        "upper": cert.upper,
        "design_value": lower,
        "gap": cert.upper - lower,
        "ratio": cert.upper / lower if lower > 0 else None,
        "sources": dict(cert.sources, lower="greedy" if lower == tau_greedy else "cvx_rounded"),
        "solver_status": sol.status if sol is not None and "convex" in methods else None,
        "zeta": ZETA,
    }
    for name, rec in out.items():
        rec["gap"] = assess_design(rec["tau_final"], cert).gap
        rec["tree_count"] = _safe_exp(rec["tau_final"])
    if inst.regularized and not all(math.isfinite(r["tau_final"]) for r in out.values()):
        raise InfeasibleInstance("a method returned a disconnected design")
    params = {"k": k, "requested": list(methods)}
    return RunResult(command, _instance_info(inst), params, "ok", out, cert_d)


def run_sparsify(
    graph: WeightedGraph,
    removable: CandidateSet,
    k: int,
    methods: Sequence[str] = ("greedy", "convex"),
    opts: cvx.SolverOptions | None = None,
    seed: int = 0,
    max_nodes: int = 10**6,
    timing: bool = False,
) -> RunResult:
    """Delete ``k`` removable edges keeping the tree count as high as possible.

    Solved as re-adding ``|removable| - k`` of them to the graph stripped of
    every removable edge.
    """
    new_base, cands, d = transform_minus_to_plus(graph, removable, k)
    info = {"n": graph.n, "m": graph.m, "removable": len(removable), "d": d}
    params = {"k": k, "requested": list(methods)}
    need = count_components(new_base.n, [e.pair for e in new_base.edges]) - 1
    connected_all = is_connected(graph)
    if not connected_all or need > d:
        rec = RunResult("sparsify", info, params, "infeasible")
        raise InfeasibleInstance(
            f"removing {k} of these edges always disconnects the graph "
            f"(must keep at least {need}, may keep {d})",
            rec,
        )
    inst = Instance.build(new_base, cands)
    res = run_synth(
        new_base, cands, d, methods, opts, seed, False, max_nodes, timing, "sparsify", inst
    )
    for rec in res.methods.values():
        kept = set(rec["chosen"])
        rec["removed"] = [i for i in range(len(cands)) if i not in kept]
        rec["removed_edges"] = [[cands[i].u, cands[i].v, cands[i].weight] for i in rec["removed"]]
    res.instance = dict(info, tau_input=log_tree_count(graph), tau_stripped=res.instance["tau_init"])
    return res


def run_dual(
    base: WeightedGraph,
    cands: CandidateSet,
    delta: float,
    methods: Sequence[str] = ("greedy", "convex"),
    opts: cvx.SolverOptions | None = None,
    absolute_delta: bool = False,
    timing: bool = False,
) -> RunResult:
    """Fewest candidate edges reaching a tree-connectivity gain of ``delta``."""
    if not is_connected(base):
        raise GraphError("base graph is disconnected")
    inst = Instance.build(base, cands)
    opts = opts or cvx.SolverOptions()
    info = _instance_info(inst)
    params = {"delta": delta, "absolute_delta": absolute_delta, "requested": list(methods)}
    with _Clock(timing) as clk:
        gr = greedy_dual_from_laplacian(inst.L0, inst.cols, inst.weights, delta, absolute_delta)
    out = {
        "greedy": {
            "chosen": list(gr.chosen),
            "edges": inst.edges(gr.chosen),
            "k": gr.k,
            "tau_final": gr.tau_final,
            "gain": gr.gain,
            "feasible": gr.feasible,
            "phi_pre_terminal": gr.phi_pre_terminal,
            "time_ms": clk.ms,
        }
    }
    if not gr.feasible:
        rec = RunResult("dual", info, params, "infeasible", out)
        raise InfeasibleInstance(
            f"gain {gr.delta} unreachable; all candidates give {gr.gain}", rec
        )
    target = gr.delta
    gamma = gr.gamma
    out["greedy"]["gamma"] = gamma
    k_cvx = sum_pi = None
    status = None
    if "convex" in methods:
        with _Clock(timing) as clk:
            relax = inst.relaxation()
            sol = cvx.solve_dual_relaxation_on(relax, target, opts)
            chosen = cvx.round_dual_on(relax, sol.pi_star, target)
        k_cvx, sum_pi, status = len(chosen), float(sol.pi_star.sum()), sol.status
        out["convex"] = {
            "chosen": chosen,
            "edges": inst.edges(chosen),
            "k": k_cvx,
            "tau_final": inst.tau(chosen),
            "sum_pi_star": sum_pi,
            "objective": sol.objective,
            "status": sol.status,
            "pi_star": sol.pi_star,
            "time_ms": clk.ms,
        }
    if "exact" in methods:
        with _Clock(timing) as clk:
            found = exhaustive_dual(base, cands, target)
        k_opt, chosen = found
        out["exact"] = {
            "chosen": list(chosen),
            "edges": inst.edges(chosen),
            "k": k_opt,
            "tau_final": inst.tau(chosen),
            "time_ms": clk.ms,
        }
    cert = dual_bounds(gr.k, k_cvx, sum_pi, gamma)
    cert_d = {
        "lower": cert.lower,
        "upper": cert.upper,
        "design_value": cert.upper,
        "gap": cert.additive_gap,
        "ratio": cert.ratio_bound,
        "sources": cert.sources,
        "solver_status": status,
        "gamma": gamma,
    }
    return RunResult("dual", info, params, "ok", out, cert_d)
