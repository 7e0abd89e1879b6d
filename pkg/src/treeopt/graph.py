"""Weighted simple graphs, edge-list parsing and reduced Laplacians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Edge",
    "WeightedGraph",
    "CandidateSet",
    "ReducedLaplacian",
    "ParseDiagnostics",
    "GraphError",
    "ParseError",
    "VertexRangeError",
    "WeightDomainError",
    "read_edge_list",
    "parse_graph",
    "is_connected",
    "count_components",
    "laplacian",
    "reduced_laplacian",
    "edge_vector",
    "incidence_columns",
    "transform_minus_to_plus",
]


class GraphError(ValueError):
    pass


class ParseError(GraphError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


class VertexRangeError(ParseError):
    pass


class WeightDomainError(ParseError):
    pass


@dataclass(frozen=True, order=True)
class Edge:
    u: int
    v: int
    weight: float = 1.0

    def __post_init__(self):
        u, v = int(self.u), int(self.v)
        if u == v:
            raise GraphError(f"self-loop on vertex {u}")
        if u < 0 or v < 0:
            raise VertexRangeError(f"negative vertex id in edge ({u}, {v})")
        if not self.weight > 0:
            raise WeightDomainError(f"edge ({u}, {v}) has non-positive weight {self.weight}")
        if u > v:
            u, v = v, u
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v)

    def touches(self, vertex: int) -> bool:
        return vertex == self.u or vertex == self.v


def _merge(triples: Iterable[tuple[int, int, float]]) -> tuple[list[Edge], int]:
    """Sum parallel weights, drop loops, sort by (u, v)."""
    merged: dict[tuple[int, int], float] = {}
    loops = 0
    for u, v, w in triples:
        if u == v:
            loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        merged[key] = merged.get(key, 0.0) + float(w)
    edges = [Edge(u, v, w) for (u, v), w in sorted(merged.items())]
    return edges, loops


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph on vertices ``0..n-1`` with positive edge weights.

    Edges are kept in canonical ``(u, v)`` order with ``u < v``; edge indices
    used elsewhere in the package refer to this order.
    """

    n: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.n < 2:
            raise GraphError(f"need at least 2 vertices, got n={self.n}")
        edges = tuple(sorted(self.edges))
        seen = set()
        for e in edges:
            if e.v >= self.n:
                raise VertexRangeError(f"vertex {e.v} out of range for n={self.n}")
            if e.pair in seen:
                raise GraphError(f"duplicate edge {e.pair}; merge parallel edges first")
            seen.add(e.pair)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n: int, triples: Iterable[Sequence]) -> "WeightedGraph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples, merging parallel edges."""
        norm = []
        for t in triples:
            if isinstance(t, Edge):
                norm.append((t.u, t.v, t.weight))
            elif len(t) == 2:
                norm.append((int(t[0]), int(t[1]), 1.0))
            else:
                norm.append((int(t[0]), int(t[1]), float(t[2])))
        edges, _ = _merge(norm)
        return cls(n, tuple(edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=float)

    def pairs(self) -> set[tuple[int, int]]:
        return {e.pair for e in self.edges}

    def has_edge(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self.pairs()

    def with_edges(self, extra: Iterable[Edge]) -> "WeightedGraph":
        """Return a new graph with ``extra`` added (parallel weights summed)."""
        return WeightedGraph.from_edges(self.n, list(self.edges) + list(extra))

    def without_edges(self, removed: Iterable[Edge]) -> "WeightedGraph":
        gone = {e.pair for e in removed}
        return WeightedGraph(self.n, tuple(e for e in self.edges if e.pair not in gone))

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        lines += [f"{e.u} {e.v} {e.weight!r}" for e in self.edges]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CandidateSet:
    """Ordered candidate edges; position in ``edges`` is the candidate id."""

    edges: tuple[Edge, ...]
    origin: str = "addition"

    def __post_init__(self):
        edges = tuple(self.edges)
        if len({e.pair for e in edges}) != len(edges):
            raise GraphError("duplicate candidate edges")
        if self.origin not in ("addition", "deletion-transformed"):
            raise ValueError(f"unknown candidate origin {self.origin!r}")
        object.__setattr__(self, "edges", edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __getitem__(self, i: int) -> Edge:
        return self.edges[i]

    def __iter__(self):
        return iter(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=float)

    @classmethod
    def from_graph(cls, g: WeightedGraph, origin: str = "addition") -> "CandidateSet":
        return cls(g.edges, origin)

    @classmethod
    def complement(cls, g: WeightedGraph, weight: float = 1.0) -> "CandidateSet":
        """All vertex pairs not joined in ``g``, each with the given weight."""
        present = g.pairs()
        edges = [
            Edge(u, v, weight)
            for u in range(g.n)
            for v in range(u + 1, g.n)
            if (u, v) not in present
        ]
        return cls(tuple(edges))

    def check_disjoint(self, g: WeightedGraph) -> None:
        overlap = g.pairs() & {e.pair for e in self.edges}
        if overlap:
            raise GraphError(f"candidate edges already in base graph: {sorted(overlap)}")


@dataclass(frozen=True)
class ReducedLaplacian:
    anchor: int
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ParseDiagnostics:
    loops_dropped: int = 0
    parallel_merged: int = 0


def read_edge_list(text: str) -> tuple[WeightedGraph, ParseDiagnostics]:
    """Parse the edge-list format and return the graph with parse diagnostics.

    The first non-comment line must be ``n <count>``; each following line is
    ``u v [w]`` with 0-based vertex ids and an optional weight (default 1).
    ``#`` starts a comment.
    """
    n = None
    raw: list[tuple[int, int, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 2 or tokens[0] != "n":
                raise ParseError("expected header 'n <count>'", lineno)
            try:
                n = int(tokens[1])
            except ValueError:
                raise ParseError(f"bad vertex count {tokens[1]!r}", lineno) from None
            if n < 2:
                raise ParseError(f"vertex count must be >= 2, got {n}", lineno)
            continue
        if len(tokens) not in (2, 3):
            raise ParseError(f"expected 'u v [w]', got {line!r}", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
            w = float(tokens[2]) if len(tokens) == 3 else 1.0
        except ValueError:
            raise ParseError(f"malformed edge {line!r}", lineno) from None
        if not (0 <= u < n and 0 <= v < n):
            raise VertexRangeError(f"vertex id out of range [0, {n})", lineno)
        if not (w > 0 and np.isfinite(w)):
            raise WeightDomainError(f"weight must be positive and finite, got {w}", lineno)
        raw.append((u, v, w))
    if n is None:
        raise ParseError("missing header 'n <count>'")
    edges, loops = _merge(raw)
    diag = ParseDiagnostics(loops_dropped=loops, parallel_merged=len(raw) - loops - len(edges))
    if loops:
        logger.warning("dropped %d self-loop(s)", loops)
    return WeightedGraph(n, tuple(edges)), diag


def parse_graph(text: str) -> WeightedGraph:
    return read_edge_list(text)[0]


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def count_components(n: int, pairs: Iterable[tuple[int, int]]) -> int:
    parent = list(range(n))
    comps = n
    for u, v in pairs:
        ru, rv = _find(parent, u), _find(parent, v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return comps


def is_connected(g: WeightedGraph) -> bool:
    return count_components(g.n, (e.pair for e in g.edges)) == 1


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Full n x n weighted Laplacian."""
    lap = np.zeros((g.n, g.n))
    for e in g.edges:
        lap[e.u, e.u] += e.weight
        lap[e.v, e.v] += e.weight
        lap[e.u, e.v] -= e.weight
        lap[e.v, e.u] -= e.weight
    return lap


def _reduced_index(vertex: int, anchor: int) -> int:
    # -1 marks the anchor, whose coordinate is dropped
    if vertex == anchor:
        return -1
    return vertex if vertex < anchor else vertex - 1


def _check_anchor(anchor: int, n: int) -> int:
    anchor = int(anchor)
    if not 0 <= anchor < n:
        raise VertexRangeError(f"anchor {anchor} out of range for n={n}")
    return anchor


def edge_vector(e: Edge, anchor: int | None, n: int) -> np.ndarray:
    """Reduced incidence column ``e_u - e_v`` with the anchor coordinate removed."""
    anchor = n - 1 if anchor is None else _check_anchor(anchor, n)
    a = np.zeros(n - 1)
    iu, iv = _reduced_index(e.u, anchor), _reduced_index(e.v, anchor)
    if iu >= 0:
        a[iu] = 1.0
    if iv >= 0:
        a[iv] = -1.0
    return a


def incidence_columns(edges: Sequence[Edge], n: int, anchor: int | None = None) -> np.ndarray:
    """Stack reduced incidence columns of ``edges`` into an (n-1) x len(edges) array."""
    anchor = n - 1 if anchor is None else _check_anchor(anchor, n)
    cols = np.zeros((n - 1, len(edges)))
    for j, e in enumerate(edges):
        iu, iv = _reduced_index(e.u, anchor), _reduced_index(e.v, anchor)
        if iu >= 0:
            cols[iu, j] = 1.0
        if iv >= 0:
            cols[iv, j] = -1.0
    return cols


def reduced_laplacian(g: WeightedGraph, anchor: int | None = None) -> ReducedLaplacian:
    """Reduced weighted Laplacian ``A W A^T`` after anchoring ``anchor`` (default n-1)."""
    anchor = g.n - 1 if anchor is None else _check_anchor(anchor, g.n)
    if not g.edges:
        return ReducedLaplacian(anchor, np.zeros((g.n - 1, g.n - 1)))
    A = incidence_columns(g.edges, g.n, anchor)
    return ReducedLaplacian(anchor, (A * g.weights) @ A.T)


def transform_minus_to_plus(
    base: WeightedGraph, m_minus: CandidateSet, k: int
) -> tuple[WeightedGraph, CandidateSet, int]:
    """Rewrite "delete k edges of ``m_minus``" as "add d of them back".

    Deleting ``k`` edges from ``m_minus`` is the same as keeping the other
    ``|m_minus| - k``; the returned problem starts from ``base`` with all of
    ``m_minus`` removed and re-adds ``d = |m_minus| - k`` of them.
    """
    present = {e.pair: e for e in base.edges}
    for e in m_minus:
        if e.pair not in present:
            raise GraphError(f"removable edge {e.pair} is not in the base graph")
    if not 0 <= k <= len(m_minus):
        raise ValueError(f"k={k} outside [0, {len(m_minus)}]")
    # weights come from the base graph, whatever the removable file said
    cands = CandidateSet(tuple(present[e.pair] for e in m_minus), "deletion-transformed")
    return base.without_edges(m_minus), cands, len(m_minus) - k
