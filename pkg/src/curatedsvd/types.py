"""Shared value types: model/observation matrices, weights, SVD results, config.

All types are frozen after construction. Dense entries are stored as
read-only ``float64`` arrays; matrices with more than ``SPARSE_ENTRY_LIMIT``
cells are stored as CSR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

Matrix = Union[np.ndarray, sp.spmatrix, sp.sparray]

# dense below this many cells, CSR above
SPARSE_ENTRY_LIMIT = 4_000_000
RANK_RTOL = 1e-9
# rank validation needs a dense SVD; skipped above this dimension
RANK_CHECK_MAX_K = 2048

_KIND_NAMES = ("poisson", "bernoulli", "binomial", "distribution", "collab")


@dataclass(frozen=True)
class ModelKind:
    """Observation-model tag, with its parameter where one exists.

    ``binomial`` carries the trial count t, ``distribution`` the sample
    size n and ``collab`` the observation probability p.
    """

    name: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.name not in _KIND_NAMES:
            raise ValueError(f"unknown model kind {self.name!r}")
        if self.name in ("poisson", "bernoulli"):
            if self.param is not None:
                raise ValueError(f"{self.name} takes no parameter")
        elif self.param is None:
            raise ValueError(f"{self.name} requires a parameter")
        elif self.name in ("binomial", "distribution"):
            if self.param != int(self.param) or self.param < 1:
                raise ValueError(f"{self.name} parameter must be a positive integer")
            object.__setattr__(self, "param", int(self.param))
        elif not 0.0 < self.param <= 1.0:
            raise ValueError("collab probability must lie in (0, 1]")

    @classmethod
    def poisson(cls) -> "ModelKind":
        return cls("poisson")

    @classmethod
    def bernoulli(cls) -> "ModelKind":
        return cls("bernoulli")

    @classmethod
    def binomial(cls, t: int) -> "ModelKind":
        return cls("binomial", t)

    @classmethod
    def distribution(cls, n: int) -> "ModelKind":
        return cls("distribution", n)

    @classmethod
    def collab(cls, p: float) -> "ModelKind":
        return cls("collab", float(p))

    @classmethod
    def parse(cls, name: str, param: Optional[str] = None) -> "ModelKind":
        name = name.lower()
        if param is None:
            return cls(name)
        value = float(param)
        return cls(name, value)

    @property
    def integer_valued(self) -> bool:
        return self.name in ("poisson", "binomial", "distribution")

    @property
    def upper_bound(self) -> float:
        """Largest admissible model entry (inf when unbounded)."""
        if self.name == "bernoulli":
            return 1.0
        if self.name == "binomial":
            return float(self.param)
        if self.name == "collab":
            return float(self.param)
        return math.inf

    def header_tokens(self) -> list[str]:
        if self.param is None:
            return [self.name]
        return [self.name, repr(self.param)]

    def __str__(self) -> str:
        return " ".join(self.header_tokens())


# ---------------------------------------------------------------- helpers


def is_sparse(a) -> bool:
    return sp.issparse(a)


def as_dense(a: Matrix) -> np.ndarray:
    if sp.issparse(a):
        return a.toarray()
    return np.asarray(a, dtype=float)


def l1_norm(a: Matrix) -> float:
    """Entrywise L1 norm."""
    if sp.issparse(a):
        return float(np.abs(a.data).sum())
    return float(np.abs(a).sum())


def row_sums(a: Matrix) -> np.ndarray:
    return np.asarray(a.sum(axis=1)).ravel().astype(float)


def col_sums(a: Matrix) -> np.ndarray:
    return np.asarray(a.sum(axis=0)).ravel().astype(float)


def numerical_rank(a: Matrix, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(as_dense(a), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def _freeze(entries, k: int) -> Matrix:
    if sp.issparse(entries):
        a = sp.csr_matrix(entries, dtype=float)
        a.sum_duplicates()
        a.eliminate_zeros()
        for arr in (a.data, a.indices, a.indptr):
            arr.flags.writeable = False
    else:
        a = np.array(entries, dtype=float)
        if k * k > SPARSE_ENTRY_LIMIT:
            a = sp.csr_matrix(a)
            return _freeze(a, k)
        a.flags.writeable = False
    if a.shape != (k, k):
        raise ValueError(f"entries have shape {a.shape}, expected ({k}, {k})")
    return a


def _values(a: Matrix) -> np.ndarray:
    return a.data if sp.issparse(a) else a.ravel()


# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class ModelMatrix:
    """Expected-observation matrix M = E[X] of rank at most ``r``."""

    k: int
    r: int
    entries: Matrix
    model_kind: ModelKind

    def __post_init__(self):
        if self.k < 1 or self.r < 1:
            raise ValueError("k and r must be positive")
        a = _freeze(self.entries, self.k)
        object.__setattr__(self, "entries", a)
        vals = _values(a)
        if not np.all(np.isfinite(vals)):
            raise ValueError("model entries must be finite")
        if vals.size and vals.min() < 0:
            raise ValueError("model entries must be nonnegative")
        hi = self.model_kind.upper_bound
        if vals.size and vals.max() > hi * (1 + 1e-12):
            raise ValueError(
                f"{self.model_kind.name} model entries must lie in [0, {hi:g}]"
            )
        if self.model_kind.name == "distribution":
            n = self.model_kind.param
            if not math.isclose(vals.sum(), n, rel_tol=1e-9):
                raise ValueError(f"distribution model entries must sum to {n}")
        if self.k <= RANK_CHECK_MAX_K:
            rank = numerical_rank(a)
            if rank > self.r:
                raise ValueError(f"model has numerical rank {rank} > r = {self.r}")

    @property
    def mass(self) -> float:
        """||M||_1, the expected number of observations."""
        return l1_norm(self.entries)

    def dense(self) -> np.ndarray:
        return as_dense(self.entries)


@dataclass(frozen=True)
class Observation:
    """One draw X ~ M. ``r`` is carried along for file headers when known."""

    k: int
    entries: Matrix
    model_kind: ModelKind
    r: Optional[int] = None

    def __post_init__(self):
        a = _freeze(self.entries, self.k)
        object.__setattr__(self, "entries", a)
        vals = _values(a)
        if vals.size == 0:
            return
        if not np.all(np.isfinite(vals)) or vals.min() < 0:
            raise ValueError("observation entries must be finite and nonnegative")
        name = self.model_kind.name
        if self.model_kind.integer_valued and not np.all(vals == np.round(vals)):
            raise ValueError(f"{name} observations must be integers")
        if name == "bernoulli" and not np.all((vals == 0) | (vals == 1)):
            raise ValueError("bernoulli observations must be 0 or 1")
        if name == "binomial" and vals.max() > self.model_kind.param:
            raise ValueError("binomial observations cannot exceed t")
        if name == "collab" and vals.max() > 1.0:
            raise ValueError("collab observations must lie in [0, 1]")

    @property
    def total(self) -> float:
        """||X||_1."""
        return l1_norm(self.entries)

    def dense(self) -> np.ndarray:
        return as_dense(self.entries)


@dataclass(frozen=True)
class RegWeights:
    """Row weights ``wf`` and column weights ``wb``, every entry >= 1."""

    wf: np.ndarray
    wb: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        wf = np.array(self.wf, dtype=float)
        wb = np.array(self.wb, dtype=float)
        if wf.ndim != 1 or wb.shape != wf.shape:
            raise ValueError("wf and wb must be vectors of equal length")
        if wf.size and (wf.min() < 1.0 or wb.min() < 1.0):
            raise ValueError("regularization weights must be >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        wf.flags.writeable = False
        wb.flags.writeable = False
        object.__setattr__(self, "wf", wf)
        object.__setattr__(self, "wb", wb)

    @classmethod
    def unit(cls, k: int) -> "RegWeights":
        return cls(np.ones(k), np.ones(k))

    @property
    def k(self) -> int:
        return self.wf.size


@dataclass(frozen=True)
class SvdResult:
    """Top singular triplets. ``u`` and ``v`` hold the vectors as columns."""

    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    source_rows_zeroed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for name in ("sigma", "u", "v"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "source_rows_zeroed", frozenset(self.source_rows_zeroed))
        if self.u.shape[1] != self.sigma.size or self.v.shape[1] != self.sigma.size:
            raise ValueError("u, v must have one column per singular value")
        if np.any(np.diff(self.sigma) > 0):
            raise ValueError("singular values must be non-increasing")

    @property
    def rank(self) -> int:
        return self.sigma.size

    def triplets(self):
        for j in range(self.rank):
            yield self.sigma[j], self.u[:, j], self.v[:, j]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T

    def max_residual(self, a: Matrix) -> float:
        """max_j ||A v_j - sigma_j u_j||."""
        if self.rank == 0:
            return 0.0
        res = a @ self.v - self.u * self.sigma
        return float(np.linalg.norm(np.asarray(res), axis=0).max())


@dataclass(frozen=True)
class CuratedConfig:
    """Knobs for Curated SVD.

    ``c_tau`` and ``c_w`` are the constants hidden in the asymptotic forms of
    the noise threshold tau and the weight capacity W_cn. ``restarts=None``
    means ceil(log2 k).
    """

    r: int
    c_tau: float = 1.0
    c_w: float = 1.0
    restarts: Optional[int] = None
    seed: int = 0
    n_total_override: Optional[float] = None
    svd_dense_threshold: int = 2048
    threads: int = 1

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be positive")
        if self.c_tau <= 0 or self.c_w <= 0:
            raise ValueError("c_tau and c_w must be positive")
        if self.restarts is not None and self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.n_total_override is not None and self.n_total_override <= 0:
            raise ValueError("n_total_override must be positive")
        if self.svd_dense_threshold < 1 or self.threads < 1:
            raise ValueError("thresholds must be positive")

    def restarts_for(self, k: int) -> int:
        if self.restarts is not None:
            return self.restarts
        return max(1, math.ceil(math.log2(k))) if k > 1 else 1


class EmptyObservationError(ValueError):
    pass


def n_avg(obs: Observation, cfg: CuratedConfig) -> float:
    """Average number of observations per row, ||M||_1 / k.

    Uses ``cfg.n_total_override`` as ||M||_1 when set, else estimates it
    by ||X||_1.
    """
    if obs.k < 1:
        raise ValueError("k must be positive")
    if cfg.n_total_override is not None:
        return cfg.n_total_override / obs.k
    total = obs.total
    if total == 0:
        raise EmptyObservationError("empty observation")
    return total / obs.k
