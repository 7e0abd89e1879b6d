"""Dense SPD kernels: Cholesky, rank-one update, triangular solve, log-det."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "CholeskyFactor",
    "NotPositiveDefinite",
    "cholesky",
    "chol_update",
    "forward_solve",
    "logdet",
]

PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-12


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised for a singular or indefinite matrix (for a reduced Laplacian: a disconnected graph)."""


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with positive diagonal; the factored matrix is ``L @ L.T``."""

    L: np.ndarray

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        L.setflags(write=False)
        object.__setattr__(self, "L", L)

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    def matrix(self) -> np.ndarray:
        return self.L @ self.L.T


def cholesky(m) -> CholeskyFactor:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        return CholeskyFactor(np.zeros((0, 0)))
    scale = np.max(np.abs(m))
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    max_diag = np.max(np.diag(m))
    if not max_diag > 0:
        raise NotPositiveDefinite("non-positive diagonal")
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if not np.all(pivots > PIVOT_RTOL * max_diag):
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} below {PIVOT_RTOL:g} x max diagonal"
        )
    return CholeskyFactor(L)


def _update_inplace(L: np.ndarray, x: np.ndarray) -> None:
    # column sweep of plane rotations; keeps the diagonal positive
    n = L.shape[0]
    for k in range(n):
        if x[k] == 0.0:
            continue
        lkk = L[k, k]
        r = np.hypot(lkk, x[k])
        c = r / lkk
        s = x[k] / lkk
        L[k, k] = r
        if k + 1 < n:
            L[k + 1 :, k] = (L[k + 1 :, k] + s * x[k + 1 :]) / c
            x[k + 1 :] = c * x[k + 1 :] - s * L[k + 1 :, k]


def chol_update(f: CholeskyFactor, x) -> CholeskyFactor:
    """Factor of ``L L^T + x x^T`` in O(dim^2); ``f`` is left untouched."""
    x = np.array(x, dtype=float).ravel()
    if x.shape[0] != f.dim:
        raise ValueError(f"update vector has length {x.shape[0]}, factor has dim {f.dim}")
    L = f.L.copy()
    _update_inplace(L, x)
    return CholeskyFactor(L)


def forward_solve(f: CholeskyFactor, b) -> np.ndarray:
    """Solve ``L x = b`` by forward substitution.

    ``b`` may be a vector or a 2-D array whose columns are solved together.
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.dim:
        raise ValueError(f"right-hand side has length {b.shape[0]}, factor has dim {f.dim}")
    if f.dim == 0:
        return b.copy()
    return solve_triangular(f.L, b, lower=True, check_finite=False)


def logdet(f: CholeskyFactor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(f.L))))
