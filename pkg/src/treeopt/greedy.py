"""Greedy edge selection: cardinality, partition-matroid and dual (coverage) forms.

Every round scores each remaining candidate by its effective resistance
``w_e * Delta_e`` against the current Cholesky factor, adds the best one,
and folds it into the factor with a rank-one update.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .certificates import wolsey_gamma
from .graph import (
    CandidateSet,
    GraphError,
    WeightedGraph,
    incidence_columns,
    is_connected,
    reduced_laplacian,
)
from .linalg import CholeskyFactor, chol_update, cholesky, forward_solve, logdet

__all__ = [
    "PartitionMatroid",
    "SelectionResult",
    "DualSelectionResult",
    "TIE_RTOL",
    "FEASIBILITY_TOL",
    "best_edge",
    "greedy_esp",
    "greedy_matroid_esp",
    "greedy_dual_esp",
    "degree_cap_matroid",
    "greedy_from_laplacian",
    "greedy_dual_from_laplacian",
]

# scores this close to the best count as ties (lowest index wins)
TIE_RTOL = 1e-12
# slack when comparing an achieved gain against a target
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class PartitionMatroid:
    blocks: tuple[tuple[int, ...], ...]
    budgets: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
        budgets = tuple(int(k) for k in self.budgets)
        if len(blocks) != len(budgets):
            raise ValueError("need one budget per block")
        seen: set[int] = set()
        for b, k in zip(blocks, budgets):
            if seen & set(b) or len(set(b)) != len(b):
                raise ValueError("matroid blocks overlap")
            seen |= set(b)
            if not 0 <= k <= len(b):
                raise ValueError(f"budget {k} outside [0, {len(b)}] for block {b}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "budgets", budgets)

    @property
    def ground_size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def check_covers(self, c: int) -> None:
        members = sorted(i for b in self.blocks for i in b)
        if members != list(range(c)):
            raise ValueError(f"matroid blocks must partition candidate ids 0..{c - 1}")

    def block_of(self) -> dict[int, int]:
        return {i: j for j, b in enumerate(self.blocks) for i in b}

    def is_independent(self, chosen: Sequence[int]) -> bool:
        owner = self.block_of()
        counts = [0] * len(self.blocks)
        for i in chosen:
            counts[owner[i]] += 1
        return all(c <= k for c, k in zip(counts, self.budgets))


@dataclass(frozen=True)
class SelectionResult:
    """Greedy output: ``chosen`` lists candidate ids in pick order."""

    chosen: tuple[int, ...]
    tau_init: float
    tau_final: float
    gain_sequence: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.chosen)

    @property
    def gain(self) -> float:
        return self.tau_final - self.tau_init


@dataclass(frozen=True)
class DualSelectionResult(SelectionResult):
    delta: float = 0.0
    feasible: bool = True
    # gain of the greedy set one step before termination
    phi_pre_terminal: float = 0.0

    @property
    def gamma(self) -> float:
        if not self.feasible:
            raise ValueError("no approximation factor for an infeasible run")
        if self.delta <= 0:
            return 1.0
        return wolsey_gamma(self.delta, self.phi_pre_terminal)


def _scores(f: CholeskyFactor, cols: np.ndarray, weights: np.ndarray) -> np.ndarray:
    x = forward_solve(f, cols)
    return weights * np.einsum("ij,ij->j", x, x)


def _argmax_lowest(values: np.ndarray) -> int:
    best = values.max()
    return int(np.flatnonzero(values >= best - TIE_RTOL * abs(best))[0])


def best_edge(
    f: CholeskyFactor,
    cands: CandidateSet,
    remaining: Sequence[int] | None = None,
) -> tuple[int, float]:
    """Remaining candidate with the largest ``w_e * Delta_e`` and its log-gain.

    ``f`` factors the current reduced Laplacian under the default anchor.
    """
    idx = list(range(len(cands))) if remaining is None else sorted(remaining)
    if not idx:
        raise ValueError("no candidates left")
    n = f.dim + 1
    cols = incidence_columns([cands[i] for i in idx], n)
    s = _scores(f, cols, cands.weights[idx])
    j = _argmax_lowest(s)
    return idx[j], math.log1p(s[j])


def _run(
    L_init: np.ndarray,
    cols: np.ndarray,
    weights: np.ndarray,
    eligible: Callable[[list[int]], Callable[[int], bool]],
    stop: Callable[[list[int], float], bool],
    lazy: bool = False,
):
    f = cholesky(L_init)
    tau0 = logdet(f)
    chosen: list[int] = []
    gains: list[float] = []
    remaining = list(range(cols.shape[1]))
    heap: list[tuple[float, int]] = []
    if lazy and remaining:
        s0 = _scores(f, cols, weights)
        heap = [(-s0[i], i) for i in remaining]
        heapq.heapify(heap)
    phi = 0.0
    while not stop(chosen, phi):
        ok = eligible(chosen)
        if lazy:
            pick = _lazy_pick(f, cols, weights, heap, ok)
            if pick is None:
                break
            i, s = pick
        else:
            live = [i for i in remaining if ok(i)]
            if not live:
                break
            s_live = _scores(f, cols[:, live], weights[live])
            j = _argmax_lowest(s_live)
            i, s = live[j], s_live[j]
            remaining.remove(i)
        chosen.append(i)
        gains.append(math.log1p(s))
        phi += gains[-1]
        f = chol_update(f, math.sqrt(weights[i]) * cols[:, i])
    return f, tau0, chosen, gains


def _lazy_pick(f, cols, weights, heap, ok):
    # stale scores are upper bounds by submodularity; ineligible entries are
    # dropped for good since block budgets never refill
    while heap:
        _, i = heapq.heappop(heap)
        if not ok(i):
            continue
        s = float(_scores(f, cols[:, [i]], weights[[i]])[0])
        if not heap or s >= -heap[0][0] * (1 - TIE_RTOL):
            return i, s
        heapq.heappush(heap, (-s, i))
    return None


def _always(chosen):
    return lambda i: True


def greedy_from_laplacian(
    L_init: np.ndarray, cols: np.ndarray, weights: np.ndarray, k: int, lazy: bool = False
) -> SelectionResult:
    """Cardinality greedy on a raw reduced Laplacian and candidate columns."""
    c = cols.shape[1]
    if not 0 <= k <= c:
        raise ValueError(f"k={k} outside [0, {c}]")
    f, tau0, chosen, gains = _run(
        L_init, cols, weights, _always, lambda ch, phi: len(ch) >= k, lazy
    )
    return SelectionResult(tuple(chosen), tau0, logdet(f), tuple(gains))


def _prepare(base: WeightedGraph, cands: CandidateSet):
    if not is_connected(base):
        raise GraphError("base graph is disconnected")
    cands.check_disjoint(base)
    L0 = reduced_laplacian(base).matrix
    return L0, incidence_columns(cands.edges, base.n), cands.weights


def greedy_esp(base: WeightedGraph, cands: CandidateSet, k: int, lazy: bool = False) -> SelectionResult:
    """Pick ``k`` candidate edges greedily to grow the weighted tree count."""
    if not 0 <= k <= len(cands):
        raise ValueError(f"k={k} outside [0, {len(cands)}]")
    L0, cols, w = _prepare(base, cands)
    return greedy_from_laplacian(L0, cols, w, k, lazy)


def greedy_matroid_esp(
    base: WeightedGraph, cands: CandidateSet, matroid: PartitionMatroid, lazy: bool = False
) -> SelectionResult:
    """Greedy restricted to candidates whose block still has budget left."""
    matroid.check_covers(len(cands))
    L0, cols, w = _prepare(base, cands)
    owner = matroid.block_of()

    def eligible(chosen):
        used = [0] * len(matroid.blocks)
        for i in chosen:
            used[owner[i]] += 1
        return lambda i: used[owner[i]] < matroid.budgets[owner[i]]

    total = sum(matroid.budgets)
    f, tau0, chosen, gains = _run(L0, cols, w, eligible, lambda ch, phi: len(ch) >= total, lazy)
    return SelectionResult(tuple(chosen), tau0, logdet(f), tuple(gains))


def degree_cap_matroid(cands: CandidateSet, v: int, d: int, k: int) -> PartitionMatroid:
    """Blocks for "at most ``k`` edges, at most ``d`` of them touching ``v``".

    The budgets are clipped to block sizes so small candidate sets stay valid.
    """
    if d > k:
        raise ValueError(f"degree cap d={d} exceeds k={k}")
    touching = tuple(i for i, e in enumerate(cands) if e.touches(v))
    rest = tuple(i for i, e in enumerate(cands) if not e.touches(v))
    return PartitionMatroid((touching, rest), (min(d, len(touching)), min(k - d, len(rest))))


def greedy_dual_from_laplacian(
    L_init: np.ndarray,
    cols: np.ndarray,
    weights: np.ndarray,
    delta: float,
    absolute_delta: bool = False,
    lazy: bool = False,
) -> DualSelectionResult:
    """Add best edges until the gain reaches ``delta`` or candidates run out.

    With ``absolute_delta`` the target is ``log det L >= delta`` rather than a
    gain of ``delta`` over the base graph.
    """
    tau0 = logdet(cholesky(L_init))
    target_gain = delta - tau0 if absolute_delta else delta
    if target_gain < 0 and not absolute_delta:
        raise ValueError(f"delta must be non-negative, got {delta}")
    f, tau0, chosen, gains = _run(
        L_init,
        cols,
        weights,
        _always,
        lambda ch, phi: phi >= target_gain - FEASIBILITY_TOL,
        lazy,
    )
    phi = float(sum(gains))
    feasible = phi >= target_gain - FEASIBILITY_TOL
    pre = float(sum(gains[:-1])) if gains else 0.0
    return DualSelectionResult(
        tuple(chosen),
        tau0,
        logdet(f),
        tuple(gains),
        delta=max(target_gain, 0.0),
        feasible=feasible,
        phi_pre_terminal=pre,
    )


def greedy_dual_esp(
    base: WeightedGraph,
    cands: CandidateSet,
    delta: float,
    absolute_delta: bool = False,
    lazy: bool = False,
) -> DualSelectionResult:
    """Fewest greedy additions reaching a tree-connectivity gain of ``delta``.

    Infeasible targets are reported through ``feasible=False`` together with
    the gain that was reached using every candidate.
    """
    L0, cols, w = _prepare(base, cands)
    return greedy_dual_from_laplacian(L0, cols, w, delta, absolute_delta, lazy)
