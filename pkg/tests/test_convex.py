import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treeopt.convex import (
    CONVERGED,
    Infeasible,
    Relaxation,
    SolverOptions,
    build_l_pi,
    objective_gradient,
    project_box,
    project_capped_simplex,
    project_partition,
    round_dual,
    round_randomized,
    round_topk,
    solve_dual_relaxation,
    solve_penalized,
    solve_relaxation,
    solve_relaxation_matroid,
)
from treeopt.graph import CandidateSet, Edge, WeightedGraph, reduced_laplacian
from treeopt.greedy import PartitionMatroid, degree_cap_matroid
from treeopt.oracle import exhaustive_esp, exhaustive_matroid_esp

from _instances import cands, path, random_instance

P3, C02 = path(3), cands((0, 2))


def test_build_l_pi_endpoints():
    base, cs = path(4), cands((0, 2), (1, 3))
    np.testing.assert_array_equal(build_l_pi(base, cs, [0, 0]).matrix, reduced_laplacian(base).matrix)
    full = base.with_edges(cs)
    np.testing.assert_allclose(build_l_pi(base, cs, [1, 1]).matrix, reduced_laplacian(full).matrix)


def test_build_l_pi_half():
    assert np.linalg.det(build_l_pi(P3, C02, [0.5]).matrix) == pytest.approx(2.0)


def test_objective_gradient_values():
    v, g = objective_gradient(P3, C02, [0.0])
    assert v == pytest.approx(0.0, abs=1e-15) and g == pytest.approx([2.0])
    v, g = objective_gradient(P3, C02, [1.0])
    assert v == pytest.approx(math.log(3)) and g == pytest.approx([2 / 3])


def test_gradient_central_differences():
    rng = np.random.default_rng(5)
    h = 1e-5
    for _ in range(20):
        base, cs = random_instance(rng)
        relax = Relaxation.from_graph(base, cs)
        pi = rng.uniform(0, 1, len(cs))
        _, g = relax.value_grad(pi)
        for j in range(len(cs)):
            e = np.zeros(len(cs))
            e[j] = h
            fd = (relax.value(pi + e) - relax.value(pi - e)) / (2 * h)
            assert abs(g[j] - fd) <= 1e-6


@pytest.mark.parametrize(
    "y, budget, expected",
    [((0.5, 0.5), 1, (0.5, 0.5)), ((2, -1), 1, (1, 0)), ((0.8, 0.8), 1, (0.5, 0.5))],
)
def test_capped_simplex_examples(y, budget, expected):
    np.testing.assert_allclose(project_capped_simplex(np.array(y, float), budget), expected, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12),
    st.floats(0, 1),
)
def test_capped_simplex_feasible_idempotent(y, frac):
    y = np.array(y)
    budget = frac * y.size
    x = project_capped_simplex(y, budget)
    assert np.all(x >= -1e-10) and np.all(x <= 1 + 1e-10)
    assert abs(x.sum() - budget) <= 1e-10
    np.testing.assert_allclose(project_capped_simplex(x, budget), x, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=8), st.integers(0, 2**31 - 1))
def test_capped_simplex_is_nearest(y, seed):
    # no random feasible point is closer to y than its projection
    y = np.array(y)
    budget = y.size / 2
    x = project_capped_simplex(y, budget)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        z = project_capped_simplex(rng.uniform(-1, 2, y.size), budget)
        assert np.linalg.norm(y - x) <= np.linalg.norm(y - z) + 1e-9


def test_capped_simplex_rejects_bad_budget():
    with pytest.raises(ValueError):
        project_capped_simplex(np.zeros(2), 3)


def test_project_box():
    np.testing.assert_array_equal(project_box([-1.0, 0.3, 4.0]), [0.0, 0.3, 1.0])


def test_project_partition():
    m = PartitionMatroid(((0, 1), (2, 3)), (1, 2))
    x = project_partition(np.array([0.9, 0.9, 1.5, -0.2]), m)
    np.testing.assert_allclose(x, [0.5, 0.5, 1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(project_partition(x, m), x, atol=1e-12)


def test_relaxation_full_budget():
    base, cs = path(4), cands((0, 2), (0, 3), (1, 3))
    sol = solve_relaxation(base, cs, 3)
    np.testing.assert_allclose(sol.pi_star, 1.0)
    assert sol.objective == pytest.approx(math.log(16))


def test_relaxation_star_symmetry():
    star = WeightedGraph(4, (Edge(0, 3, 1.0), Edge(1, 3, 1.0), Edge(2, 3, 1.0)))
    sol = solve_relaxation(star, cands((0, 1), (0, 2), (1, 2)), 1)
    assert sol.status == CONVERGED
    np.testing.assert_allclose(sol.pi_star, 1 / 3, atol=1e-6)


def test_relaxation_p4_bounds_opt():
    base, cs = path(4), cands((0, 3), (1, 3))
    sol = solve_relaxation(base, cs, 1)
    opt, _ = exhaustive_esp(base, cs, 1)
    assert opt == pytest.approx(math.log(4))
    assert sol.objective >= opt - 1e-9
    assert sol.stationarity <= 1e-6


def test_relaxation_upper_bound_early_stop():
    rng = np.random.default_rng(2)
    base, cs = random_instance(rng, n_range=(6, 6), c_max=8)
    full = solve_relaxation(base, cs, 2)
    early = solve_relaxation(base, cs, 2, SolverOptions(max_iters=1))
    assert early.status == "max_iters_reached"
    assert early.upper_bound >= full.objective - 1e-9
    assert full.upper_bound - full.objective <= 1e-5


def test_penalized_zero_and_large():
    base, cs = path(4), cands((0, 2), (0, 3), (1, 3))
    np.testing.assert_allclose(solve_penalized(base, cs, 0.0).pi_star, 1.0, atol=1e-9)
    _, g0 = objective_gradient(base, cs, np.zeros(3))
    np.testing.assert_allclose(solve_penalized(base, cs, float(g0.max())).pi_star, 0.0, atol=1e-9)


def test_penalized_sweep_monotone():
    rng = np.random.default_rng(8)
    base, cs = random_instance(rng, n_range=(6, 6), c_max=8)
    norms = [solve_penalized(base, cs, lam).pi_star.sum() for lam in np.linspace(0, 3, 13)]
    assert all(a >= b - 1e-6 for a, b in zip(norms, norms[1:]))


def test_matroid_single_block_matches_budget():
    rng = np.random.default_rng(9)
    base, cs = random_instance(rng, n_range=(6, 6), c_max=7)
    a = solve_relaxation_matroid(base, cs, PartitionMatroid((tuple(range(len(cs))),), (2,)))
    b = solve_relaxation(base, cs, 2)
    np.testing.assert_allclose(a.pi_star, b.pi_star, atol=1e-5)
    assert a.objective == pytest.approx(b.objective, abs=1e-8)


def test_matroid_full_block_at_ceiling():
    base, cs = path(4), cands((0, 2), (0, 3), (1, 3))
    sol = solve_relaxation_matroid(base, cs, PartitionMatroid(((0, 1), (2,)), (2, 0)))
    np.testing.assert_allclose(sol.pi_star, [1, 1, 0], atol=1e-9)


def test_matroid_relaxation_bounds_exhaustive():
    base = WeightedGraph(5, tuple(Edge(i, i + 1, 1.0) for i in range(4)))
    cs = CandidateSet.complement(base)
    for v in range(5):
        m = degree_cap_matroid(cs, v, 1, 3)
        sol = solve_relaxation_matroid(base, cs, m)
        opt, _ = exhaustive_matroid_esp(base, cs, m)
        assert sol.upper_bound >= opt - 1e-9
        assert sol.budget_residual <= 1e-9


def test_dual_relaxation_examples():
    sol = solve_dual_relaxation(P3, C02, 0.0)
    assert sol.pi_star.sum() == 0.0
    sol = solve_dual_relaxation(P3, C02, math.log(3))
    assert sol.pi_star.sum() == pytest.approx(1.0, abs=1e-5)
    sol = solve_dual_relaxation(P3, C02, math.log(2))
    assert sol.pi_star.sum() == pytest.approx(0.5, abs=1e-5)
    with pytest.raises(Infeasible) as info:
        solve_dual_relaxation(P3, C02, 2.0)
    assert info.value.achieved == pytest.approx(math.log(3))


def test_round_topk_examples():
    assert round_topk([0.9, 0.1, 0.5], 2) == [0, 2]
    assert round_topk([0.4, 0.4, 0.4], 2) == [0, 1]
    assert round_topk([0, 1, 1, 0], 2) == [1, 2]


def test_round_randomized_degenerate():
    for seed in range(10):
        assert round_randomized([1, 0, 1], seed) == [0, 2]


def test_round_randomized_mean_count():
    counts = [len(round_randomized([0.5] * 4, s)) for s in range(10_000)]
    se = math.sqrt(1.0 / 10_000)  # binomial(4, 1/2) has variance 1
    assert abs(np.mean(counts) - 2.0) <= 3 * se


def test_round_randomized_repair():
    pi = np.array([0.9, 0.8, 0.1, 0.2])
    for seed in range(50):
        assert len(round_randomized(pi, seed, k=2, repair=True)) == 2
    assert round_randomized(np.zeros(4), 0, k=2, repair=True) == [0, 1]


def test_round_randomized_reproducible():
    pi = np.full(30, 0.3)
    assert round_randomized(pi, 42) == round_randomized(pi, 42)


def test_round_dual_examples():
    assert round_dual([1.0], P3, C02, math.log(3)) == [0]
    base, cs = path(4), cands((0, 3), (1, 3))
    delta = math.log(4) + 0.01
    sol = solve_dual_relaxation(base, cs, delta)
    assert sorted(round_dual(sol.pi_star, base, cs, delta)) == [0, 1]
