"""Truncated SVD, de-regularized (t, w)-SVD, spectral norm and row impacts."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .regularization import deregularize, regularize
from .types import Matrix, RegWeights, SvdResult, as_dense

ZERO_SIGMA_RTOL = 1e-12
OVERSAMPLING = 10
POWER_ITERATIONS = 4


def _canonical_signs(u: np.ndarray, v: np.ndarray):
    """Flip each pair so the first nonzero entry of u_j is positive."""
    for j in range(u.shape[1]):
        nz = np.flatnonzero(np.abs(u[:, j]) > 1e-14)
        if nz.size and u[nz[0], j] < 0:
            u[:, j] *= -1
            v[:, j] *= -1
    return u, v


def _randomized_svd(a: Matrix, t: int, seed: int):
    k = a.shape[1]
    rng = np.random.default_rng(seed)
    width = min(t + OVERSAMPLING, k)
    q, _ = np.linalg.qr(np.asarray(a @ rng.standard_normal((k, width))))
    for _ in range(POWER_ITERATIONS):
        z, _ = np.linalg.qr(np.asarray(a.T @ q))
        q, _ = np.linalg.qr(np.asarray(a @ z))
    b = np.asarray((a.T @ q).T)
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    return q @ ub[:, :t], s[:t], vt[:t].T


def truncated_svd(
    a: Matrix,
    t: int,
    *,
    dense_threshold: int = 2048,
    seed: int = 0,
    rows_zeroed: Iterable[int] = (),
) -> SvdResult:
    """Top-``t`` singular triplets of ``a``.

    Exact LAPACK SVD when k <= ``dense_threshold``, seeded randomized
    subspace iteration otherwise. Singular values below 1e-12 sigma_1 are
    reported as exactly 0.
    """
    k = a.shape[0]
    if not 1 <= t <= min(a.shape):
        raise ValueError(f"truncation rank t={t} must lie in [1, {min(a.shape)}]")
    if k <= dense_threshold:
        u, s, vt = np.linalg.svd(as_dense(a), full_matrices=False)
        u, s, v = u[:, :t], s[:t], vt[:t].T
    else:
        if not sp.issparse(a):
            a = np.asarray(a, dtype=float)
        u, s, v = _randomized_svd(a, t, seed)
    u, v = _canonical_signs(np.array(u), np.array(v))
    s = np.array(s)
    if s.size and s[0] > 0:
        s[s < ZERO_SIGMA_RTOL * s[0]] = 0.0
    return SvdResult(s, u, v, frozenset(rows_zeroed))


def rw_svd(
    a: Matrix, t: int, w: RegWeights, *, dense_threshold: int = 2048, seed: int = 0
) -> np.ndarray:
    """(t, w)-SVD: rank-t truncation of R(A, w), mapped back by D^1/2."""
    svd = truncated_svd(regularize(a, w), t, dense_threshold=dense_threshold, seed=seed)
    return deregularize(svd.reconstruct(), w)


def spectral_norm(a: Matrix, tol: float = 1e-9, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on A^T A."""
    x = np.random.default_rng(seed).standard_normal(a.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(max_iter):
        y = np.asarray(a @ x).ravel()
        new_sigma = float(np.linalg.norm(y))
        if new_sigma == 0.0:
            return 0.0
        z = np.asarray(a.T @ y).ravel()
        x = z / np.linalg.norm(z)
        if abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    return float(np.linalg.norm(np.asarray(a @ x)))


def _row_index(rows: Iterable[int]) -> np.ndarray:
    return np.fromiter(rows, dtype=int)


def impact(svd: SvdResult, rows: Iterable[int], j: int) -> float:
    """H(A, I, j) = sigma_j^2 * sum_{i in I} u_j(i)^2."""
    if not 0 <= j < svd.rank:
        raise IndexError(f"component {j} outside truncation rank {svd.rank}")
    idx = _row_index(rows)
    return float(svd.sigma[j] ** 2 * np.sum(svd.u[idx, j] ** 2))


@dataclass(frozen=True)
class ImpactTable:
    """``values[i, j]`` is the impact of row i on component j."""

    values: np.ndarray

    @classmethod
    def from_svd(cls, svd: SvdResult) -> "ImpactTable":
        return cls((svd.u**2) * svd.sigma**2)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


def zero_rows(a: Matrix, rows: Iterable[int]) -> Matrix:
    """Copy of ``a`` with the listed rows set to zero."""
    idx = _row_index(rows)
    if sp.issparse(a):
        keep = np.ones(a.shape[0])
        keep[idx] = 0.0
        out = sp.csr_matrix(sp.diags(keep) @ a)
        out.eliminate_zeros()
        return out
    out = np.array(a, dtype=float)
    out[idx] = 0.0
    return out
