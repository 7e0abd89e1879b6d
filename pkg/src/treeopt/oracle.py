"""Exponential-time ground truth for small instances.

Nothing here is fast; everything here is simple enough to trust.  Size
guards raise :class:`GuardExceeded` instead of truncating.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import (
    CandidateSet,
    GraphError,
    WeightedGraph,
    count_components,
    incidence_columns,
    is_connected,
    reduced_laplacian,
)
from .linalg import CholeskyFactor, chol_update, cholesky, forward_solve, logdet
from .treeconn import log_tree_count

__all__ = [
    "GuardExceeded",
    "SpanningTreeList",
    "enumerate_spanning_trees",
    "spanning_trees_by_subsets",
    "exhaustive_esp",
    "exhaustive_dual",
    "exhaustive_matroid_esp",
    "branch_and_bound_esp",
    "expected_tree_count_bruteforce",
    "expected_det_bruteforce",
]

MAX_TREE_VERTICES = 10
MAX_TREE_EDGES = 20
MAX_SUBSETS = 10**6
MAX_SUBGRAPH_EDGES = 20


class GuardExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SpanningTreeList:
    trees: tuple[tuple[int, ...], ...]
    values: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    def containing(self, edge_index: int) -> "SpanningTreeList":
        keep = [i for i, t in enumerate(self.trees) if edge_index in t]
        return SpanningTreeList(
            tuple(self.trees[i] for i in keep), tuple(self.values[i] for i in keep)
        )


def _guard_tree(g: WeightedGraph) -> None:
    if g.n > MAX_TREE_VERTICES or g.m > MAX_TREE_EDGES:
        raise GuardExceeded(
            f"spanning-tree enumeration limited to n<={MAX_TREE_VERTICES}, m<={MAX_TREE_EDGES}"
        )


def enumerate_spanning_trees(g: WeightedGraph) -> SpanningTreeList:
    """All spanning trees by deletion-contraction; trees are edge-index tuples."""
    _guard_tree(g)
    found: list[tuple[int, ...]] = []

    def rec(label: list[int], i: int, picked: list[int], comps: int):
        # label[v] is v's contracted super-vertex
        if comps == 1:
            found.append(tuple(picked))
            return
        if i == g.m:
            return
        # not enough edges left to join the remaining components
        if g.m - i < comps - 1:
            return
        e = g.edges[i]
        a, b = label[e.u], label[e.v]
        if a != b:
            merged = [a if x == b else x for x in label]
            picked.append(i)
            rec(merged, i + 1, picked, comps - 1)
            picked.pop()
        rec(label, i + 1, picked, comps)

    rec(list(range(g.n)), 0, [], g.n)
    w = g.weights
    values = tuple(float(np.prod(w[list(t)])) for t in found)
    return SpanningTreeList(tuple(found), values)


def spanning_trees_by_subsets(g: WeightedGraph) -> SpanningTreeList:
    """Same as :func:`enumerate_spanning_trees` by filtering all (n-1)-subsets."""
    _guard_tree(g)
    trees = []
    for sub in itertools.combinations(range(g.m), g.n - 1):
        if count_components(g.n, (g.edges[i].pair for i in sub)) == 1:
            trees.append(sub)
    w = g.weights
    return SpanningTreeList(tuple(trees), tuple(float(np.prod(w[list(t)])) for t in trees))


def _guard_subsets(c: int, k: int) -> None:
    if math.comb(c, k) > MAX_SUBSETS:
        raise GuardExceeded(f"C({c},{k}) = {math.comb(c, k)} subsets exceeds {MAX_SUBSETS}")


def _subset_value(base: WeightedGraph, cands: CandidateSet, sub: Sequence[int]) -> float:
    return log_tree_count(base.with_edges(cands[i] for i in sub))


def exhaustive_esp(
    base: WeightedGraph, cands: CandidateSet, k: int
) -> tuple[float, tuple[int, ...]]:
    """Best tree-connectivity over every ``k``-subset of candidates.

    Disconnected results score ``-inf``; ties keep the lexicographically
    smallest subset.
    """
    c = len(cands)
    if not 0 <= k <= c:
        raise ValueError(f"k={k} outside [0, {c}]")
    _guard_subsets(c, k)
    best, arg = -math.inf, ()
    for sub in itertools.combinations(range(c), k):
        v = _subset_value(base, cands, sub)
        if v > best + 1e-12:
            best, arg = v, sub
    return best, arg


def exhaustive_matroid_esp(base: WeightedGraph, cands: CandidateSet, matroid) -> tuple[float, tuple[int, ...]]:
    """Best value over all independent sets of a partition matroid."""
    c = len(cands)
    if 2**c > MAX_SUBSETS:
        raise GuardExceeded(f"2^{c} subsets exceeds {MAX_SUBSETS}")
    best, arg = -math.inf, ()
    for r in range(c + 1):
        for sub in itertools.combinations(range(c), r):
            if matroid.is_independent(sub):
                v = _subset_value(base, cands, sub)
                if v > best + 1e-12:
                    best, arg = v, sub
    return best, arg


def exhaustive_dual(
    base: WeightedGraph, cands: CandidateSet, delta: float, tol: float = 1e-9
) -> tuple[int, tuple[int, ...]] | None:
    """Fewest candidates whose addition raises tree-connectivity by ``delta``.

    Returns ``None`` if even all candidates fall short.
    """
    c = len(cands)
    if 2**c > MAX_SUBSETS:
        raise GuardExceeded(f"2^{c} subsets exceeds {MAX_SUBSETS}")
    tau0 = log_tree_count(base)
    for r in range(c + 1):
        for sub in itertools.combinations(range(c), r):
            if _subset_value(base, cands, sub) - tau0 >= delta - tol:
                return r, sub
    return None


def branch_and_bound_esp(
    base: WeightedGraph,
    cands: CandidateSet,
    k: int,
    incumbent: float | None = None,
    max_nodes: int = 10**6,
) -> tuple[float, tuple[int, ...]]:
    """Exact ``k``-subset optimum by depth-first branch and bound.

    At a node with partial set ``S`` and ``r`` picks left, the optimum of any
    completion is at most ``tau(S)`` plus the ``r`` largest single-edge gains
    measured at ``S`` (diminishing returns of the log tree count).  Subtrees
    whose bound cannot beat the incumbent are cut.  ``max_nodes`` bounds the
    number of expanded nodes.
    """
    if not is_connected(base):
        raise GraphError("base graph is disconnected")
    cands.check_disjoint(base)
    c = len(cands)
    if not 0 <= k <= c:
        raise ValueError(f"k={k} outside [0, {c}]")
    cols = incidence_columns(cands.edges, base.n)
    w = cands.weights
    f0 = cholesky(reduced_laplacian(base).matrix)
    best = [-math.inf if incumbent is None else incumbent - 1e-9, None]
    nodes = [0]

    def gains(f: CholeskyFactor, idx: np.ndarray) -> np.ndarray:
        x = forward_solve(f, cols[:, idx])
        return np.log1p(w[idx] * np.einsum("ij,ij->j", x, x))

    def rec(f: CholeskyFactor, tau: float, chosen: list[int], pool: np.ndarray):
        r = k - len(chosen)
        if r == 0:
            if tau > best[0]:
                best[0], best[1] = tau, tuple(sorted(chosen))
            return
        if pool.size < r:
            return
        nodes[0] += 1
        if nodes[0] > max_nodes:
            raise GuardExceeded(f"branch and bound exceeded {max_nodes} nodes")
        g = gains(f, pool)
        order = np.argsort(-g, kind="stable")
        pool, g = pool[order], g[order]
        if r == 1:
            if tau + g[0] > best[0]:
                best[0], best[1] = tau + g[0], tuple(sorted(chosen + [int(pool[0])]))
            return
        # window sums g[i:i+r] bound every completion whose best edge is pool[i]
        csum = np.concatenate(([0.0], np.cumsum(g)))
        for i in range(pool.size - r + 1):
            if tau + csum[i + r] - csum[i] <= best[0] + 1e-12:
                break
            j = int(pool[i])
            f1 = chol_update(f, math.sqrt(w[j]) * cols[:, j])
            rec(f1, tau + g[i], chosen + [j], pool[i + 1 :])

    rec(f0, logdet(f0), [], np.arange(c))
    if best[1] is None:
        # the incumbent was already optimal; recover a set by plain search
        return branch_and_bound_esp(base, cands, k, None, max_nodes)
    return best[0], best[1]


def _bernoulli_outcomes(p: np.ndarray):
    m = p.shape[0]
    for bits in itertools.product((0, 1), repeat=m):
        s = np.array(bits, dtype=bool)
        prob = float(np.prod(np.where(s, p, 1.0 - p)))
        yield s, prob


def expected_tree_count_bruteforce(g0: WeightedGraph, probs: Sequence[float]) -> float:
    """Average weighted tree count over all ``2^m`` edge-survival patterns."""
    if g0.m > MAX_SUBGRAPH_EDGES:
        raise GuardExceeded(f"m={g0.m} exceeds {MAX_SUBGRAPH_EDGES} for subgraph enumeration")
    p = np.asarray([getattr(x, "p", x) for x in probs], dtype=float)
    if p.shape != (g0.m,):
        raise ValueError(f"expected {g0.m} probabilities")
    total = []
    for s, prob in _bernoulli_outcomes(p):
        if prob == 0.0:
            continue
        sub = WeightedGraph(g0.n, tuple(e for e, keep in zip(g0.edges, s) if keep))
        lt = log_tree_count(sub)
        if lt > -math.inf:
            total.append(prob * math.exp(lt))
    return math.fsum(total)


def expected_det_bruteforce(pairs: Sequence[tuple], probs: Sequence[float]) -> tuple[float, float]:
    """``E[det(sum s_i y_i z_i^T)]`` over all outcomes, and ``det(sum p_i y_i z_i^T)``."""
    m = len(pairs)
    if m > 12:
        raise GuardExceeded(f"m={m} exceeds 12")
    Y = np.array([np.atleast_1d(np.asarray(y, dtype=float)) for y, _ in pairs])
    Z = np.array([np.atleast_1d(np.asarray(z, dtype=float)) for _, z in pairs])
    if Y.shape[1] > 4:
        raise GuardExceeded(f"dimension {Y.shape[1]} exceeds 4")
    p = np.asarray(probs, dtype=float)
    terms = [prob * np.linalg.det((Y[s].T @ Z[s])) for s, prob in _bernoulli_outcomes(p) if prob]
    lhs = math.fsum(terms)
    rhs = float(np.linalg.det((Y.T * p) @ Z))
    return lhs, rhs
