"""Degree-based regularization weights and the diagonal rescaling R(A, w)."""
from __future__ import annotations

from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .types import Matrix, ModelMatrix, Observation, RegWeights, col_sums, row_sums


def _weights_from_sums(rows: np.ndarray, cols: np.ndarray, lam: float) -> RegWeights:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return RegWeights(np.maximum(1.0, rows / lam), np.maximum(1.0, cols / lam), lam)


def compute_weights(obs: Observation, lam: float) -> RegWeights:
    """w(i) = max(1, ||X_i||_1 / lam) for rows, likewise for columns."""
    return _weights_from_sums(row_sums(obs.entries), col_sums(obs.entries), lam)


def ideal_weights(model: ModelMatrix, lam: float | None = None) -> RegWeights:
    """Weights built from M itself instead of X. Diagnostics only."""
    if lam is None:
        lam = model.mass / model.k
    return _weights_from_sums(row_sums(model.entries), col_sums(model.entries), lam)


def _scale(a: Matrix, left: np.ndarray, right: np.ndarray) -> Matrix:
    if sp.issparse(a):
        return sp.csr_matrix(sp.diags(left) @ a @ sp.diags(right))
    return np.asarray(a, dtype=float) * left[:, None] * right[None, :]


def regularize(a: Matrix, w: RegWeights) -> Matrix:
    """R(A, w)_ij = A_ij / sqrt(wf(i) wb(j))."""
    return _scale(a, 1.0 / np.sqrt(w.wf), 1.0 / np.sqrt(w.wb))


def deregularize(a: Matrix, w: RegWeights) -> Matrix:
    """Inverse of :func:`regularize`."""
    return _scale(a, np.sqrt(w.wf), np.sqrt(w.wb))


def weight_of_rows(w: RegWeights, rows: Iterable[int]) -> float:
    idx = np.fromiter(rows, dtype=int)
    if idx.size == 0:
        return 0.0
    return float(w.wf[idx].sum())
