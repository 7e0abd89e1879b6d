"""Log-det relaxations of edge selection, solved by projected gradient ascent.

The selector ``pi`` scales each candidate's weight.  ``log det L(pi)`` is
concave and smooth wherever ``L(pi)`` is positive definite, which holds on
the whole box as soon as the base graph is connected.  Its partial
derivative with respect to ``pi_j`` is the effective resistance of
candidate ``j`` in the fractional graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .graph import (
    CandidateSet,
    GraphError,
    ReducedLaplacian,
    WeightedGraph,
    incidence_columns,
    is_connected,
    reduced_laplacian,
)
from .greedy import FEASIBILITY_TOL, PartitionMatroid
from .linalg import cholesky, forward_solve, logdet

__all__ = [
    "SolverOptions",
    "RelaxationSolution",
    "Infeasible",
    "Relaxation",
    "build_l_pi",
    "objective_gradient",
    "project_capped_simplex",
    "project_box",
    "project_partition",
    "solve_relaxation",
    "solve_penalized",
    "solve_relaxation_matroid",
    "solve_dual_relaxation",
    "round_topk",
    "round_randomized",
    "round_dual",
    "round_partition",
]

CONVERGED = "converged"
MAX_ITERS = "max_iters_reached"


class Infeasible(Exception):
    """The requested gain cannot be reached even with every candidate."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iters: int = 2000
    armijo: float = 1e-4
    shrink: float = 0.5
    step0: float = 1.0
    bisection_tol: float = 1e-6


@dataclass(frozen=True)
class RelaxationSolution:
    """Fractional optimum of a relaxation.

    ``upper_bound`` adds the Frank-Wolfe duality gap to ``objective`` and is
    a valid bound on the relaxation optimum even for an early-stopped run.
    """

    pi_star: np.ndarray = field(repr=False)
    objective: float
    iterations: int
    stationarity: float
    budget_residual: float
    status: str
    duality_gap: float = 0.0
    penalty: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def upper_bound(self) -> float:
        return self.objective + max(self.duality_gap, 0.0)

    @property
    def log_det(self) -> float:
        # objective without the l1 penalty term
        return self.objective + self.penalty * float(np.sum(self.pi_star))


class Relaxation:
    """``L(pi) = L0 + sum_j pi_j w_j a_j a_j^T`` on precomputed candidate columns."""

    def __init__(self, L0: np.ndarray, cols: np.ndarray, weights: np.ndarray):
        self.L0 = np.asarray(L0, dtype=float)
        self.cols = np.asarray(cols, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.c = self.cols.shape[1]

    @classmethod
    def from_graph(cls, base: WeightedGraph, cands: CandidateSet) -> "Relaxation":
        if not is_connected(base):
            raise GraphError("base graph is disconnected")
        cands.check_disjoint(base)
        return cls(
            reduced_laplacian(base).matrix,
            incidence_columns(cands.edges, base.n),
            cands.weights,
        )

    def matrix(self, pi: np.ndarray) -> np.ndarray:
        pi = self._check(pi)
        return self.L0 + (self.cols * (self.weights * pi)) @ self.cols.T

    def value_grad(self, pi: np.ndarray) -> tuple[float, np.ndarray]:
        f = cholesky(self.matrix(pi))
        x = forward_solve(f, self.cols)
        return logdet(f), self.weights * np.einsum("ij,ij->j", x, x)

    def value(self, pi: np.ndarray) -> float:
        return logdet(cholesky(self.matrix(pi)))

    def _check(self, pi) -> np.ndarray:
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (self.c,):
            raise ValueError(f"selector has shape {pi.shape}, expected ({self.c},)")
        return pi


def build_l_pi(base: WeightedGraph, cands: CandidateSet, pi) -> ReducedLaplacian:
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (len(cands),):
        raise ValueError(f"selector has length {pi.shape}, expected {len(cands)}")
    L0 = reduced_laplacian(base).matrix
    cols = incidence_columns(cands.edges, base.n)
    return ReducedLaplacian(base.n - 1, L0 + (cols * (cands.weights * pi)) @ cols.T)


def objective_gradient(base: WeightedGraph, cands: CandidateSet, pi) -> tuple[float, np.ndarray]:
    """``log det L(pi)`` and its gradient (fractional effective resistances)."""
    return Relaxation.from_graph(base, cands).value_grad(np.asarray(pi, dtype=float))


# -- projections ---------------------------------------------------------------


def project_box(y) -> np.ndarray:
    return np.clip(np.asarray(y, dtype=float), 0.0, 1.0)


def project_capped_simplex(y, budget: float, tol: float = 1e-12) -> np.ndarray:
    """Euclidean projection onto ``{0 <= x <= 1, sum(x) = budget}``.

    Bisects on the shift ``lam`` in ``clip(y - lam, 0, 1)``, whose sum is
    non-increasing in ``lam``.
    """
    y = np.asarray(y, dtype=float)
    c = y.shape[0]
    if not 0.0 <= budget <= c + 1e-12:
        raise ValueError(f"budget {budget} outside [0, {c}]")
    budget = min(float(budget), float(c))
    if c == 0:
        return y.copy()
    lo, hi = float(y.min()) - 1.0, float(y.max())
    # sum(clip(y - lo)) = c >= budget >= 0 = sum(clip(y - hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = np.clip(y - mid, 0.0, 1.0).sum()
        if abs(s - budget) <= tol:
            lo = hi = mid
            break
        if s > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(mid)):
            break
    x = np.clip(y - 0.5 * (lo + hi), 0.0, 1.0)
    # spread any leftover rounding error over the free coordinates
    free = (x > 0.0) & (x < 1.0)
    if free.any():
        x[free] += (budget - x.sum()) / free.sum()
        x = np.clip(x, 0.0, 1.0)
    return x


def project_partition(y, matroid: PartitionMatroid) -> np.ndarray:
    """Projection onto ``{0 <= x <= 1, sum over block j <= k_j}``.

    Per block: clip to the box, and if that overshoots the budget, project
    onto the capped simplex with sum exactly ``k_j``.
    """
    x = project_box(y)
    for block, k in zip(matroid.blocks, matroid.budgets):
        idx = list(block)
        if not idx:
            continue
        if x[idx].sum() > k:
            x[idx] = project_capped_simplex(np.asarray(y, dtype=float)[idx], k)
    return x


# -- solver --------------------------------------------------------------------


def _ascent(
    value_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    project: Callable[[np.ndarray], np.ndarray],
    lmo_gap: Callable[[np.ndarray, np.ndarray], float],
    x0: np.ndarray,
    opts: SolverOptions,
):
    """Projected gradient ascent with Armijo backtracking along the projection arc."""
    x = project(x0)
    fx, g = value_grad(x)
    step = opts.step0
    it = 0
    stat = float(np.linalg.norm(project(x + g) - x))
    status = MAX_ITERS
    for it in range(1, opts.max_iters + 1):
        if stat <= opts.tol:
            status = CONVERGED
            it -= 1
            break
        t = step
        while True:
            xn = project(x + t * g)
            d = xn - x
            fn, gn = value_grad(xn)
            if fn >= fx + opts.armijo * float(g @ d) or t < 1e-14:
                break
            t *= opts.shrink
        if fn < fx:
            # no ascent left at machine precision
            status = CONVERGED if stat <= opts.tol else MAX_ITERS
            break
        # a first-try acceptance lets the next trial step double
        step = min(2.0 * t, 1e6) if t == step else t
        x, fx, g = xn, fn, gn
        stat = float(np.linalg.norm(project(x + g) - x))
    else:
        if stat <= opts.tol:
            status = CONVERGED
    return x, fx, g, it, stat, status, lmo_gap(x, g)


def _solve(relax: Relaxation, project, lmo_gap, x0, opts, penalty=0.0):
    if penalty:
        def vg(p):
            v, g = relax.value_grad(p)
            return v - penalty * p.sum(), g - penalty
    else:
        vg = relax.value_grad
    x, fx, g, it, stat, status, gap = _ascent(vg, project, lmo_gap, x0, opts)
    return x, fx, it, stat, status, gap


def _topk_gap(budget: float):
    # max over the capped simplex of <g, s - x>: put mass on the largest entries
    def gap(x, g):
        k = int(math.floor(budget))
        frac = budget - k
        order = np.argsort(-g, kind="stable")
        best = g[order[:k]].sum()
        if frac > 0 and k < len(g):
            best += frac * g[order[k]]
        return float(best - g @ x)
    return gap


def _box_gap(x, g):
    return float(np.maximum(g, 0.0).sum() - g @ x)


def _partition_gap(matroid: PartitionMatroid):
    def gap(x, g):
        total = 0.0
        for block, k in zip(matroid.blocks, matroid.budgets):
            idx = np.asarray(block, dtype=int)
            if idx.size:
                gb = np.sort(g[idx])[::-1][:k]
                total += np.maximum(gb, 0.0).sum()
        return float(total - g @ x)
    return gap


def solve_relaxation_on(
    relax: Relaxation, k: float, opts: SolverOptions | None = None, x0=None
) -> RelaxationSolution:
    """Maximize ``log det L(pi)`` over the capped simplex with ``sum(pi) = k``."""
    opts = opts or SolverOptions()
    c = relax.c
    if not 0 <= k <= c:
        raise ValueError(f"budget {k} outside [0, {c}]")
    if c == 0:
        return RelaxationSolution(np.zeros(0), relax.value(np.zeros(0)), 0, 0.0, 0.0, CONVERGED)
    start = np.full(c, k / c) if x0 is None else np.asarray(x0, dtype=float)
    project = lambda y: project_capped_simplex(y, k)  # noqa: E731
    x, fx, it, stat, status, gap = _solve(relax, project, _topk_gap(k), start, opts)
    return RelaxationSolution(x, fx, it, stat, float(abs(x.sum() - k)), status, gap)


def solve_relaxation(
    base: WeightedGraph, cands: CandidateSet, k: float, opts: SolverOptions | None = None
) -> RelaxationSolution:
    """Budgeted relaxation; its value bounds the best ``k``-edge design from above."""
    return solve_relaxation_on(Relaxation.from_graph(base, cands), k, opts)


def solve_penalized(
    base: WeightedGraph, cands: CandidateSet, lam: float, opts: SolverOptions | None = None
) -> RelaxationSolution:
    """``log det L(pi) - lam * sum(pi)`` over the unit box."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    opts = opts or SolverOptions()
    relax = Relaxation.from_graph(base, cands)
    start = np.full(relax.c, 0.5)

    def gap(x, g):
        return _box_gap(x, g)

    x, fx, it, stat, status, dgap = _solve(relax, project_box, gap, start, opts, penalty=lam)
    return RelaxationSolution(x, fx, it, stat, 0.0, status, dgap, penalty=lam)


def solve_relaxation_matroid(
    base: WeightedGraph,
    cands: CandidateSet,
    matroid: PartitionMatroid,
    opts: SolverOptions | None = None,
) -> RelaxationSolution:
    """Relaxation with per-block budgets ``sum_{i in block j} pi_i <= k_j``."""
    opts = opts or SolverOptions()
    matroid.check_covers(len(cands))
    relax = Relaxation.from_graph(base, cands)
    start = np.zeros(relax.c)
    for block, k in zip(matroid.blocks, matroid.budgets):
        if block:
            start[list(block)] = k / len(block)
    project = lambda y: project_partition(y, matroid)  # noqa: E731
    x, fx, it, stat, status, gap = _solve(relax, project, _partition_gap(matroid), start, opts)
    over = max(
        [x[list(b)].sum() - k for b, k in zip(matroid.blocks, matroid.budgets) if b] + [0.0]
    )
    return RelaxationSolution(x, fx, it, stat, float(over), status, gap)


def solve_dual_relaxation_on(
    relax: Relaxation, delta: float, opts: SolverOptions | None = None
) -> RelaxationSolution:
    """Smallest fractional budget whose relaxation reaches a gain of ``delta``.

    Bisects on the budget ``b``; the relaxation optimum is non-decreasing in
    ``b`` so the search is monotone.
    """
    opts = opts or SolverOptions()
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    c = relax.c
    tau0 = relax.value(np.zeros(c))
    target = tau0 + delta
    if delta <= FEASIBILITY_TOL:
        return RelaxationSolution(np.zeros(c), tau0, 0, 0.0, 0.0, CONVERGED)
    full = relax.value(np.ones(c))
    if full < target - FEASIBILITY_TOL:
        raise Infeasible(f"gain {delta} unreachable; all candidates give {full - tau0}", full - tau0)
    lo, hi = 0.0, float(c)
    best = solve_relaxation_on(relax, hi, opts)
    while hi - lo > opts.bisection_tol:
        mid = 0.5 * (lo + hi)
        warm = project_capped_simplex(best.pi_star * (mid / hi), mid)
        sol = solve_relaxation_on(relax, mid, opts, x0=warm)
        if sol.objective >= target - FEASIBILITY_TOL:
            hi, best = mid, sol
        else:
            lo = mid
    return replace(best, budget_residual=float(abs(best.pi_star.sum() - hi)))


def solve_dual_relaxation(
    base: WeightedGraph, cands: CandidateSet, delta: float, opts: SolverOptions | None = None
) -> RelaxationSolution:
    return solve_dual_relaxation_on(Relaxation.from_graph(base, cands), delta, opts)


# -- rounding ------------------------------------------------------------------


def _descending(pi: np.ndarray) -> np.ndarray:
    # largest first, ties to the lowest index
    return np.lexsort((np.arange(pi.shape[0]), -pi))


def round_topk(pi_star, k: int) -> list[int]:
    pi = np.asarray(pi_star, dtype=float)
    if not 0 <= k <= pi.shape[0]:
        raise ValueError(f"k={k} outside [0, {pi.shape[0]}]")
    return sorted(int(i) for i in _descending(pi)[:k])


def round_partition(pi_star, matroid: PartitionMatroid) -> list[int]:
    """Top ``k_j`` entries inside each block."""
    pi = np.asarray(pi_star, dtype=float)
    out: list[int] = []
    for block, k in zip(matroid.blocks, matroid.budgets):
        idx = np.asarray(block, dtype=int)
        if idx.size:
            out += [int(idx[j]) for j in _descending(pi[idx])[:k]]
    return sorted(out)


def round_randomized(
    pi_star, rng_seed: int | None = None, k: int | None = None, repair: bool = False
) -> list[int]:
    """Keep candidate ``i`` independently with probability ``pi_star[i]``.

    With ``repair`` the draw is trimmed or topped up to exactly ``k`` edges,
    dropping the lowest-``pi`` picks or adding the highest-``pi`` leftovers.
    """
    pi = np.clip(np.asarray(pi_star, dtype=float), 0.0, 1.0)
    rng = np.random.default_rng(rng_seed)
    picked = rng.random(pi.shape[0]) < pi
    if repair:
        if k is None:
            raise ValueError("repair needs a target k")
        order = _descending(pi)
        have = [i for i in order if picked[i]]
        rest = [i for i in order if not picked[i]]
        if len(have) > k:
            have = have[:k]
        else:
            have += rest[: k - len(have)]
        return sorted(int(i) for i in have)
    return [int(i) for i in np.flatnonzero(picked)]


def round_dual_on(relax: Relaxation, pi_star, delta: float) -> list[int]:
    pi = np.asarray(pi_star, dtype=float)
    order = _descending(pi)
    tau0 = relax.value(np.zeros(relax.c))
    sel = np.zeros(relax.c)
    chosen: list[int] = []
    value = tau0
    for i in order:
        if value - tau0 >= delta - FEASIBILITY_TOL:
            break
        sel[i] = 1.0
        chosen.append(int(i))
        value = relax.value(sel)
    if value - tau0 < delta - FEASIBILITY_TOL:
        raise Infeasible(f"gain {delta} unreachable by rounding", value - tau0)
    return chosen


def round_dual(pi_star, base: WeightedGraph, cands: CandidateSet, delta: float) -> list[int]:
    """Walk candidates by decreasing ``pi`` until the gain reaches ``delta``."""
    return round_dual_on(Relaxation.from_graph(base, cands), pi_star, delta)
