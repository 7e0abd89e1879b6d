import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treeopt.linalg import (
    CholeskyFactor,
    NotPositiveDefinite,
    chol_update,
    cholesky,
    forward_solve,
    logdet,
)


def _spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def test_cholesky_scalar():
    np.testing.assert_allclose(cholesky(np.array([[4.0]])).L, [[2.0]])


def test_cholesky_2x2_by_hand():
    f = cholesky(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    s = math.sqrt
    np.testing.assert_allclose(f.L, [[s(2), 0], [-1 / s(2), s(1.5)]], atol=1e-15)
    np.testing.assert_allclose(f.matrix(), [[2, -1], [-1, 2]], atol=1e-14)


def test_cholesky_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_singular_laplacian():
    # full Laplacian of an edge is singular
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, -1.0], [-1.0, 1.0]]))


def test_cholesky_asymmetric():
    with pytest.raises(ValueError):
        cholesky(np.array([[2.0, 1.0], [0.0, 2.0]]))


def test_factor_is_read_only():
    f = cholesky(np.eye(2))
    with pytest.raises(ValueError):
        f.L[0, 0] = 3.0


def test_update_scalar():
    f = chol_update(cholesky(np.array([[1.0]])), np.array([1.0]))
    np.testing.assert_allclose(f.L, [[math.sqrt(2)]])


def test_update_matches_fresh():
    m = np.array([[2.0, -1.0], [-1.0, 2.0]])
    f = chol_update(cholesky(m), np.array([1.0, 0.0]))
    np.testing.assert_allclose(f.L, cholesky(np.array([[3.0, -1.0], [-1.0, 2.0]])).L, atol=1e-10)


def test_update_zero_is_identity():
    f = cholesky(_spd(np.random.default_rng(1), 5))
    np.testing.assert_array_equal(chol_update(f, np.zeros(5)).L, f.L)


def test_update_does_not_mutate_input():
    f = cholesky(np.eye(3))
    before = f.L.copy()
    chol_update(f, np.ones(3))
    np.testing.assert_array_equal(f.L, before)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_update_random(n, seed):
    rng = np.random.default_rng(seed)
    m = _spd(rng, n)
    x = rng.normal(size=n)
    f = chol_update(cholesky(m), x)
    np.testing.assert_allclose(f.matrix(), m + np.outer(x, x), rtol=1e-10, atol=1e-10)
    assert np.all(np.diag(f.L) > 0)


def test_forward_solve_small():
    assert forward_solve(CholeskyFactor(np.array([[2.0]])), np.array([4.0]))[0] == 2.0
    x = forward_solve(CholeskyFactor(np.array([[1.0, 0.0], [1.0, 1.0]])), np.array([1.0, 3.0]))
    np.testing.assert_allclose(x, [1.0, 2.0])


def test_forward_solve_residual():
    rng = np.random.default_rng(3)
    f = cholesky(_spd(rng, 5))
    b = rng.normal(size=5)
    x = forward_solve(f, b)
    assert np.linalg.norm(f.L @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_forward_solve_matrix_rhs():
    rng = np.random.default_rng(4)
    f = cholesky(_spd(rng, 4))
    B = rng.normal(size=(4, 3))
    np.testing.assert_allclose(f.L @ forward_solve(f, B), B, atol=1e-12)


@pytest.mark.parametrize(
    "m, expected",
    [(np.array([[4.0]]), math.log(4)), (np.array([[2.0, -1.0], [-1.0, 2.0]]), math.log(3)), (np.eye(7), 0.0)],
)
def test_logdet(m, expected):
    assert logdet(cholesky(m)) == pytest.approx(expected, abs=1e-14)


def test_logdet_large_does_not_overflow():
    m = 1e3 * np.eye(200)
    assert logdet(cholesky(m)) == pytest.approx(200 * math.log(1e3))
