"""Brute-force reference computations and evaluation metrics."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .types import Matrix, ModelMatrix, Observation, as_dense, l1_norm, row_sums

DENSE_ORACLE_MAX_K = 512
BRUTE_KNAPSACK_MAX_N = 22
INF_TO_2_MAX_M = 20
HEAVY_SUBSET_MAX_K = 64


@dataclass(frozen=True)
class EvalReport:
    normalized_l1: float
    mse: Optional[float] = None
    spectral_noise_norm: Optional[float] = None
    zeroed_weight: float = 0.0
    runtime_ms: Optional[float] = None

    def __post_init__(self):
        if self.normalized_l1 < 0:
            raise ValueError("normalized_l1 must be nonnegative")
        if self.mse is not None and not 0.0 <= self.mse <= 1.0:
            raise ValueError("mse must lie in [0, 1]")


def normalized_l1(m: ModelMatrix, est: Matrix) -> float:
    """||est - M||_1 / ||M||_1."""
    mass = m.mass
    if mass == 0:
        raise ValueError("model matrix has zero mass")
    return l1_norm(as_dense(est) - m.dense()) / mass


def collab_eval(f_true: np.ndarray, m_cur: np.ndarray, p: float, zeroed_weight: float = 0.0) -> EvalReport:
    """Per-entry L1 and squared error of F_cur = clamp(M_cur / p, 0, 1)."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    f_true = np.asarray(f_true, dtype=float)
    f_cur = np.clip(np.asarray(m_cur) / p, 0.0, 1.0)
    diff = f_true - f_cur
    l1 = float(np.abs(diff).mean())
    mse = float((diff**2).mean())
    # entries in [0, 1]: |d| >= d^2 entrywise
    assert l1 >= mse - 1e-15, (l1, mse)
    return EvalReport(normalized_l1=l1, mse=mse, zeroed_weight=zeroed_weight)


def dense_spectral_norm(a: Matrix) -> float:
    a = as_dense(a)
    if max(a.shape) > DENSE_ORACLE_MAX_K:
        raise ValueError(f"dense oracle limited to dimension {DENSE_ORACLE_MAX_K}")
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def brute_knapsack(values, weights, capacity: float) -> tuple[list[int], float]:
    """Exact 0-1 knapsack by enumerating all subsets."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = values.size
    if n > BRUTE_KNAPSACK_MAX_N:
        raise ValueError(f"brute force limited to {BRUTE_KNAPSACK_MAX_N} items")
    # subset sums by doubling: bit i of the subset index selects item i
    total_w = np.zeros(1)
    total_v = np.zeros(1)
    for i in range(n):
        total_w = np.concatenate([total_w, total_w + weights[i]])
        total_v = np.concatenate([total_v, total_v + values[i]])
    total_v[total_w > capacity] = -np.inf
    best = int(np.argmax(total_v))
    if total_v[best] <= 0:
        return [], 0.0
    return [i for i in range(n) if best >> i & 1], float(total_v[best])


def inf_to_2_norm(a: Matrix) -> float:
    """max over sign vectors v of ||A v||_2."""
    a = as_dense(a)
    m = a.shape[1]
    if m > INF_TO_2_MAX_M:
        raise ValueError(f"sign enumeration limited to {INF_TO_2_MAX_M} columns")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=m)))
    return float(np.linalg.norm(a @ signs.T, axis=0).max())


def row_sum_deviation(obs: Observation, m: ModelMatrix) -> float:
    """sum_i |sum_j (X_ij - M_ij)|."""
    if obs.k != m.k:
        raise ValueError("shape mismatch")
    return float(np.abs(row_sums(obs.entries) - row_sums(m.entries)).sum())


def _norm_of_rows(a: np.ndarray, rows) -> float:
    return float(np.linalg.norm(a[list(rows)], 2)) if rows else 0.0


def heavy_subset_count(a: Matrix, beta: float) -> list[list[int]]:
    """Greedily extract disjoint row subsets I with ||A_I|| > 2 beta.

    Each round first takes any single row heavier than 2 beta; failing that
    it grows a subset from the heaviest remaining row, always adding the
    row that raises the spectral norm most, until the threshold is crossed.
    Stops when the remaining rows together do not exceed 2 beta. Returns
    the subsets found; their count is the certificate.
    """
    a = as_dense(a)
    if a.shape[0] > HEAVY_SUBSET_MAX_K:
        raise ValueError(f"heavy subset search limited to {HEAVY_SUBSET_MAX_K} rows")
    limit = 2.0 * beta
    remaining = list(range(a.shape[0]))
    found: list[list[int]] = []
    while remaining and _norm_of_rows(a, remaining) > limit:
        norms = np.linalg.norm(a[remaining], axis=1)
        top = int(np.argmax(norms))
        subset = [remaining[top]]
        pool = [i for i in remaining if i != subset[0]]
        while _norm_of_rows(a, subset) <= limit:
            gains = [_norm_of_rows(a, subset + [i]) for i in pool]
            best = int(np.argmax(gains))
            subset.append(pool.pop(best))
        found.append(sorted(subset))
        remaining = [i for i in remaining if i not in subset]
    return found
