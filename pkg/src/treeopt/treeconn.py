"""Weighted spanning-tree counts, tree-connectivity and effective resistance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import (
    Edge,
    GraphError,
    WeightedGraph,
    count_components,
    edge_vector,
    incidence_columns,
    is_connected,
    reduced_laplacian,
)
from .linalg import CholeskyFactor, NotPositiveDefinite, cholesky, forward_solve, logdet

__all__ = [
    "TreeConnectivity",
    "EdgeProbability",
    "BRIDGE_TOL",
    "tree_count",
    "tree_connectivity",
    "log_tree_count",
    "effective_resistance",
    "tau_after_add",
    "tau_after_remove",
    "expected_tree_count",
]

# w * Delta this close to 1 means the edge is a bridge
BRIDGE_TOL = 1e-9


@dataclass(frozen=True)
class TreeConnectivity:
    """Log of the weighted tree count; ``value`` is 0 for a disconnected graph.

    A tree also has ``value == 0``, so always branch on ``is_connected``.
    """

    value: float
    is_connected: bool

    @property
    def tree_count_log(self) -> float:
        return self.value

    @property
    def tree_count(self) -> float:
        return math.exp(self.value) if self.is_connected else 0.0


@dataclass(frozen=True)
class EdgeProbability:
    edge_index: int
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability {self.p} outside [0, 1]")


def log_tree_count(g: WeightedGraph) -> float:
    """``log t_w(g)``, or ``-inf`` when ``g`` is disconnected."""
    if not is_connected(g):
        return -math.inf
    try:
        return logdet(cholesky(reduced_laplacian(g).matrix))
    except NotPositiveDefinite:
        return -math.inf


def tree_connectivity(g: WeightedGraph) -> TreeConnectivity:
    value = log_tree_count(g)
    if value == -math.inf:
        return TreeConnectivity(0.0, False)
    return TreeConnectivity(value, True)


def tree_count(g: WeightedGraph) -> float:
    """Weighted number of spanning trees; 0 if ``g`` is disconnected.

    Overflows for large graphs (log value above ~700); prefer
    :func:`tree_connectivity` there.
    """
    return tree_connectivity(g).tree_count


def effective_resistance(f: CholeskyFactor, a, w: float = 1.0) -> float:
    """``w * a^T (L L^T)^{-1} a`` through one forward solve."""
    a = np.asarray(a, dtype=float)
    if a.shape != (f.dim,):
        raise ValueError(f"edge vector has shape {a.shape}, factor has dim {f.dim}")
    x = forward_solve(f, a)
    return float(w) * float(x @ x)


def _factor_for(g: WeightedGraph, f: CholeskyFactor | None) -> CholeskyFactor:
    if f is None:
        f = cholesky(reduced_laplacian(g).matrix)
    elif f.dim != g.n - 1:
        raise ValueError(f"factor dim {f.dim} does not match graph with n={g.n}")
    return f


def tau_after_add(
    g: WeightedGraph, f: CholeskyFactor | None, tau: float, e: Edge
) -> float:
    """Tree-connectivity after adding ``e`` to the connected graph ``g``.

    ``f`` must factor the reduced Laplacian of ``g`` under the default anchor
    (pass ``None`` to have it computed).
    """
    if g.has_edge(e.u, e.v):
        raise GraphError(f"edge {e.pair} is already in the graph")
    f = _factor_for(g, f)
    r = effective_resistance(f, edge_vector(e, None, g.n), e.weight)
    return tau + math.log1p(r)


def tau_after_remove(
    g: WeightedGraph, f: CholeskyFactor | None, tau: float, e: Edge
) -> TreeConnectivity:
    """Tree-connectivity after deleting ``e`` (weight taken from ``g``).

    Returns a disconnected :class:`TreeConnectivity` when ``e`` is a bridge.
    """
    match = [x for x in g.edges if x.pair == e.pair]
    if not match:
        raise GraphError(f"edge {e.pair} is not in the graph")
    f = _factor_for(g, f)
    r = effective_resistance(f, edge_vector(match[0], None, g.n), match[0].weight)
    if r >= 1.0 - BRIDGE_TOL:
        return TreeConnectivity(0.0, False)
    return TreeConnectivity(tau + math.log1p(-r), True)


def _probabilities(g0: WeightedGraph, probs) -> np.ndarray:
    if len(probs) and isinstance(probs[0], EdgeProbability):
        p = np.full(g0.m, np.nan)
        for item in probs:
            if not 0 <= item.edge_index < g0.m:
                raise ValueError(f"edge index {item.edge_index} out of range")
            if not np.isnan(p[item.edge_index]):
                raise ValueError(f"duplicate probability for edge {item.edge_index}")
            p[item.edge_index] = item.p
        if np.isnan(p).any():
            missing = np.flatnonzero(np.isnan(p)).tolist()
            raise ValueError(f"missing probabilities for edges {missing}")
        return p
    p = np.asarray(probs, dtype=float)
    if p.shape != (g0.m,):
        raise ValueError(f"expected {g0.m} probabilities, got {p.shape}")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def expected_tree_count(g0: WeightedGraph, probs: Sequence[EdgeProbability] | Sequence[float]) -> float:
    """Expected weighted tree count when edge i survives independently w.p. ``p_i``.

    Equals the tree count of ``g0`` with every weight scaled by its
    probability, so it costs a single factorization.
    """
    p = _probabilities(g0, probs)
    keep = p > 0
    pairs = [e.pair for e, k in zip(g0.edges, keep) if k]
    if count_components(g0.n, pairs) != 1:
        return 0.0
    edges = [e for e, k in zip(g0.edges, keep) if k]
    A = incidence_columns(edges, g0.n)
    w = g0.weights[keep] * p[keep]
    try:
        return math.exp(logdet(cholesky((A * w) @ A.T)))
    except NotPositiveDefinite:
        return 0.0
