"""Seeded randomized checks of the linear-algebra facts the recovery rests on.

Every check draws unit-scale random instances, evaluates both sides of an
inequality (or identity) with the package's own routines on one side and a
dense reference on the other, and counts violations beyond a fixed slack.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracles
from .regularization import compute_weights, deregularize, regularize
from .spectral import impact, rw_svd, truncated_svd, zero_rows
from .types import ModelKind, Observation, RegWeights

SLACK = 1e-8
RECOVERY_RTOL = 1e-6


@dataclass(frozen=True)
class LemmaResult:
    name: str
    instances: int
    failures: int
    worst_margin: float  # max of (lhs - rhs); <= slack means pass

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name:<22} instances={self.instances:<5d} "
            f"failures={self.failures:<4d} worst_margin={self.worst_margin:+.3e}"
        )


def _sv(a) -> np.ndarray:
    return np.linalg.svd(np.asarray(a), compute_uv=False)


def _weights(rng, k) -> RegWeights:
    return RegWeights(1.0 + rng.exponential(1.0, k), 1.0 + rng.exponential(1.0, k))


def _low_rank(rng, k, r) -> np.ndarray:
    return rng.standard_normal((k, r)) @ rng.standard_normal((r, k)) / math.sqrt(k)


def _tally(name, margins, slack=SLACK) -> LemmaResult:
    margins = np.asarray(margins, dtype=float)
    return LemmaResult(name, margins.size, int(np.sum(margins > slack)), float(margins.max()))


def check_dampcon(rng, n=300) -> LemmaResult:
    """||R(A, w)|| <= sqrt(max_i |A_i|_1 / wf(i) * max_j |A_j|_1 / wb(j))."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(2, 13))
        a = rng.standard_normal((k, k)) * (rng.random((k, k)) < 0.7)
        w = _weights(rng, k)
        lhs = oracles.dense_spectral_norm(regularize(a, w))
        abs_a = np.abs(a)
        rhs = math.sqrt((abs_a.sum(1) / w.wf).max() * (abs_a.sum(0) / w.wb).max())
        margins.append(lhs - rhs)
    return _tally("dampcon", margins)


def _random_counts(rng) -> Observation:
    k = int(rng.integers(4, 31))
    rates = rng.gamma(0.5, 1.0, size=(k, 1)) * rng.gamma(0.5, 1.0, size=(1, k))
    x = rng.poisson(rates * rng.uniform(0.2, 5.0)).astype(float)
    if x.sum() == 0:
        x[0, 0] = 1.0
    return Observation(k=k, entries=x, model_kind=ModelKind.poisson())


def check_regularized_norm(rng, n=200) -> LemmaResult:
    """||R(X, w)|| <= n_avg when w is built with lambda = n_avg = ||X||_1 / k."""
    margins = []
    for _ in range(n):
        obs = _random_counts(rng)
        navg = obs.total / obs.k
        w = compute_weights(obs, navg)
        margins.append(oracles.dense_spectral_norm(regularize(obs.entries, w)) - navg)
    return _tally("regularized_norm", margins)


def check_total_weight(rng, n=200) -> LemmaResult:
    """sum_i wf(i) <= 2k and sum_j wb(j) <= 2k for lambda = ||X||_1 / k."""
    margins = []
    for _ in range(n):
        obs = _random_counts(rng)
        w = compute_weights(obs, obs.total / obs.k)
        # slack relative to k covers summation roundoff only
        margins.append((max(w.wf.sum(), w.wb.sum()) - 2 * obs.k) / obs.k)
    return _tally("total_weight", margins, slack=1e-12)


def check_spll(rng, n=200) -> LemmaResult:
    """||D^1/2(wf) A D^1/2(wb)||_1 <= sqrt(r sum wf sum wb) ||A|| for rank-r A."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(2, 13))
        r = int(rng.integers(1, k + 1))
        a = _low_rank(rng, k, r)
        w = _weights(rng, k)
        lhs = np.abs(deregularize(a, w)).sum()
        rhs = math.sqrt(r * w.wf.sum() * w.wb.sum()) * oracles.dense_spectral_norm(a)
        margins.append(lhs - rhs)
    return _tally("spll", margins)


def _partition(rng, k):
    t = int(rng.integers(1, k + 1))
    labels = rng.integers(0, t, size=k)
    return [np.flatnonzero(labels == g) for g in range(t)]


def check_subnorm(rng, n=200) -> LemmaResult:
    """||A||^2 <= sum_j ||A_{I_j}||^2 over a partition of the rows."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(2, 13))
        a = rng.standard_normal((k, k)) / math.sqrt(k)
        everything = set(range(k))
        parts = _partition(rng, k)
        rhs = sum(
            oracles.dense_spectral_norm(zero_rows(a, everything - set(p.tolist()))) ** 2
            for p in parts
        )
        margins.append(oracles.dense_spectral_norm(a) ** 2 - rhs)
    return _tally("subnorm", margins)


def check_interlacing(rng, n=200) -> LemmaResult:
    """sigma_i(A with rows zeroed) <= sigma_i(A) for every i."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(2, 13))
        a = rng.standard_normal((k, k)) / math.sqrt(k)
        rows = np.flatnonzero(rng.random(k) < rng.random())
        margins.append((_sv(zero_rows(a, rows)) - _sv(a)).max())
    return _tally("interlacing", margins)


def check_weyl(rng, n=200) -> LemmaResult:
    """sigma_{i+j-1}(A + B) <= sigma_i(A) + sigma_j(B)."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(2, 11))
        a = rng.standard_normal((k, k)) / math.sqrt(k)
        b = rng.standard_normal((k, k)) / math.sqrt(k) * rng.uniform(0.1, 2.0)
        sa, sb, sab = _sv(a), _sv(b), _sv(a + b)
        worst = -np.inf
        for i in range(k):
            for j in range(k - i):
                worst = max(worst, sab[i + j] - sa[i] - sb[j])
        margins.append(worst)
    return _tally("weyl", margins)


def check_impact_identity(rng, n=200) -> LemmaResult:
    """sigma_j^2 sum_{i in I} u_j(i)^2 == ||A_I v_j||^2."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(2, 13))
        a = rng.standard_normal((k, k)) / math.sqrt(k)
        svd = truncated_svd(a, int(rng.integers(1, k + 1)))
        rows = np.flatnonzero(rng.random(k) < 0.5)
        a_rows = zero_rows(a, sorted(set(range(k)) - set(rows.tolist())))
        worst = 0.0
        for j in range(svd.rank):
            direct = float(np.sum((a_rows @ svd.v[:, j]) ** 2))
            worst = max(worst, abs(impact(svd, rows, j) - direct))
        margins.append(worst)
    return _tally("impact_identity", margins)


def check_recovery(rng, n=200) -> LemmaResult:
    """||A - B^(r,w)||_1 <= sqrt(r sum wf sum wb) ||R(A - B, w)|| for rank-r A.

    B is A plus Gaussian noise whose scale is log-uniform on [1e-2, 10^0.5],
    so the draws range from near-exact to noise-dominated. The margin is
    reported relative to the right-hand side.
    """
    margins = []
    for _ in range(n):
        k = int(rng.integers(6, 13))
        r = int(rng.integers(1, 4))
        a = _low_rank(rng, k, r) * math.sqrt(k)
        b = a + 10 ** rng.uniform(-2.0, 0.5) * rng.standard_normal((k, k))
        w = _weights(rng, k)
        lhs = np.abs(a - rw_svd(b, r, w)).sum()
        rhs = math.sqrt(r * w.wf.sum() * w.wb.sum()) * oracles.dense_spectral_norm(regularize(a - b, w))
        margins.append(lhs / rhs - 1.0)
    return _tally("recovery", margins, slack=RECOVERY_RTOL)


def check_bad_part(rng, n=200) -> LemmaResult:
    """A = B + C, sigma_{r+1}(B) <= beta, ||C v_i|| <= 2 beta (i <= 2r) => sigma_2r(A) <= 4 beta.

    C is drawn first and the hypothesis is checked against A's own singular
    vectors; instances where it fails are redrawn.
    """
    margins = []
    while len(margins) < n:
        r = int(rng.integers(1, 4))
        k = int(rng.integers(2 * r, 13))
        beta = rng.uniform(0.05, 1.0)
        tail = rng.standard_normal((k, k))
        b = _low_rank(rng, k, r) * 5 + tail * beta / _sv(tail)[0]
        c = rng.standard_normal((k, k))
        c *= rng.uniform(0.2, 3.0) * beta / _sv(c)[0]
        a = b + c
        v = np.linalg.svd(a)[2][: 2 * r].T
        if _sv(b)[r] > beta or np.linalg.norm(c @ v, axis=0).max() > 2 * beta:
            continue
        margins.append(_sv(a)[2 * r - 1] - 4 * beta)
    return _tally("bad_part", margins)


def check_heavy_subsets(rng, n=200) -> LemmaResult:
    """Disjoint row subsets with ||A_I|| > 2 beta number at most (r alpha / beta)^2."""
    margins = []
    for _ in range(n):
        k = int(rng.integers(3, 21))
        r = int(rng.integers(1, 4))
        noise = rng.standard_normal((k, k)) * rng.uniform(0.01, 0.5) / math.sqrt(k)
        a = _low_rank(rng, k, r) + noise
        s = _sv(a)
        beta = max(s[r] if r < k else 0.0, 1e-3) * rng.uniform(1.0, 2.0)
        count = len(oracles.heavy_subset_count(a, beta))
        margins.append(count - (r * s[0] / beta) ** 2)
    return _tally("heavy_subsets", margins)


CHECKS: dict[str, Callable] = {
    "dampcon": check_dampcon,
    "regularized_norm": check_regularized_norm,
    "total_weight": check_total_weight,
    "spll": check_spll,
    "subnorm": check_subnorm,
    "interlacing": check_interlacing,
    "weyl": check_weyl,
    "impact_identity": check_impact_identity,
    "recovery": check_recovery,
    "bad_part": check_bad_part,
    "heavy_subsets": check_heavy_subsets,
}


def run_all(seed: int = 0, n: int | None = None) -> list[LemmaResult]:
    results = []
    for i, (name, check) in enumerate(CHECKS.items()):
        rng = np.random.default_rng([seed, i])
        results.append(check(rng) if n is None else check(rng, n))
    return results
