"""Curated SVD: iterative row deletion followed by a (2r, w)-SVD estimate."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .regularization import compute_weights, deregularize, regularize, weight_of_rows
from .spectral import truncated_svd, zero_rows
from .types import CuratedConfig, Observation, RegWeights, SvdResult, n_avg


@dataclass(frozen=True)
class Thresholds:
    tau: float
    w_cn: float
    impact_cutoff: float


def thresholds(navg: float, k: int, cfg: CuratedConfig) -> Thresholds:
    """tau = c_tau sqrt(n_avg) max(1, ln(r n_avg)); W_cn = max(1, c_w k / (r n_avg)^2)."""
    r = cfg.r
    tau = cfg.c_tau * math.sqrt(navg) * max(1.0, math.log(r * navg))
    w_cn = max(1.0, cfg.c_w * k / (r * navg) ** 2)
    return Thresholds(tau=tau, w_cn=w_cn, impact_cutoff=8.0 * tau**2)


def greedy_knapsack(values, weights, capacity: float) -> list[int]:
    """Half-approximate 0-1 knapsack.

    Greedy fill by value density (ties to the lower index), then compared
    with the best single item that fits; the better of the two is returned.
    Items of zero value are never selected.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape:
        raise ValueError("values and weights must have the same length")
    feasible = np.flatnonzero((weights <= capacity) & (values > 0))
    if feasible.size == 0:
        return []
    # stable sort on -density keeps the lower index first among ties
    order = feasible[np.argsort(-values[feasible] / weights[feasible], kind="stable")]
    chosen, load, total = [], 0.0, 0.0
    for i in order:
        if load + weights[i] <= capacity:
            chosen.append(int(i))
            load += weights[i]
            total += values[i]
    best = int(feasible[np.argmax(values[feasible])])
    if values[best] > total:
        return [best]
    return sorted(chosen)


def row_deletion(
    sigma: float,
    u: np.ndarray,
    w: RegWeights,
    i_zr: set[int],
    cutoff: float,
    capacity: float,
    rng: np.random.Generator,
) -> set[int]:
    """Zero rows until no light row subset has impact above ``cutoff``.

    ``u`` is the j-th left singular vector of the current regularized,
    row-zeroed matrix and ``sigma`` its singular value. ``i_zr`` is updated
    in place and also returned.
    """
    impacts = sigma**2 * np.asarray(u) ** 2
    candidate = np.ones(impacts.size, dtype=bool)
    candidate[list(i_zr)] = False
    while True:
        vals = np.where(candidate, impacts, 0.0)
        chosen = greedy_knapsack(vals, w.wf, capacity)
        if not chosen or vals[chosen].sum() <= cutoff:
            return i_zr
        probs = vals[chosen] / w.wf[chosen]
        pick = chosen[rng.choice(len(chosen), p=probs / probs.sum())]
        i_zr.add(pick)
        candidate[pick] = False


@dataclass(frozen=True)
class CuratedOutcome:
    estimate: np.ndarray
    zeroed_rows: frozenset
    zeroed_weight: float
    iterations: int
    restart_index: int
    weights: Optional[RegWeights] = None
    thresholds: Optional[Thresholds] = None
    final_svd: Optional[SvdResult] = None


def curated_svd_once(
    obs: Observation, cfg: CuratedConfig, restart_seed: int, restart_index: int = 0
) -> CuratedOutcome:
    """One run of Curated SVD with its own row-sampling seed."""
    k = obs.k
    if obs.total == 0 and cfg.n_total_override is None:
        return CuratedOutcome(np.zeros((k, k)), frozenset(), 0.0, 0, restart_index)
    navg = n_avg(obs, cfg)
    w = compute_weights(obs, navg)
    th = thresholds(navg, k, cfg)
    t = min(2 * cfg.r, k)
    reg = regularize(obs.entries, w)
    rng = np.random.default_rng(restart_seed)
    i_zr: set[int] = set()
    iterations = 0
    # each pass can only add rows, so at most k + 1 passes
    while True:
        iterations += 1
        current = zero_rows(reg, i_zr)
        svd = truncated_svd(
            current, t, dense_threshold=cfg.svd_dense_threshold, seed=restart_seed,
            rows_zeroed=i_zr,
        )
        before = set(i_zr)
        for j in range(t):
            row_deletion(svd.sigma[j], svd.u[:, j], w, i_zr, th.impact_cutoff, th.w_cn, rng)
        if i_zr == before:
            break
    estimate = np.asarray(deregularize(svd.reconstruct(), w))
    # zeroed rows of the source give u_j(i) = 0 up to roundoff; make it exact
    estimate[list(i_zr)] = 0.0
    return CuratedOutcome(
        estimate=estimate,
        zeroed_rows=frozenset(i_zr),
        zeroed_weight=weight_of_rows(w, i_zr),
        iterations=iterations,
        restart_index=restart_index,
        weights=w,
        thresholds=th,
        final_svd=svd,
    )


def curated_svd(obs: Observation, cfg: CuratedConfig) -> CuratedOutcome:
    """Best of several independent runs: smallest zeroed weight, then lowest index."""
    n = cfg.restarts_for(obs.k)

    def run(i):
        return curated_svd_once(obs, cfg, cfg.seed + i, restart_index=i)

    if cfg.threads > 1 and n > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            outcomes = list(pool.map(run, range(n)))
    else:
        outcomes = [run(i) for i in range(n)]
    return min(outcomes, key=lambda o: (o.zeroed_weight, o.restart_index))


def all_restarts(obs: Observation, cfg: CuratedConfig) -> list[CuratedOutcome]:
    """Every restart's outcome, in restart order."""
    return [curated_svd_once(obs, cfg, cfg.seed + i, i) for i in range(cfg.restarts_for(obs.k))]


def terminal_impacts(outcome: CuratedOutcome) -> np.ndarray:
    """Greedy light-subset impact per retained component at termination.

    Termination guarantees each entry is at most the 8 tau^2 cutoff.
    """
    svd, w, th = outcome.final_svd, outcome.weights, outcome.thresholds
    if svd is None:
        return np.zeros(0)
    out = np.zeros(svd.rank)
    candidate = np.ones(svd.u.shape[0], dtype=bool)
    candidate[list(outcome.zeroed_rows)] = False
    for j in range(svd.rank):
        vals = np.where(candidate, svd.sigma[j] ** 2 * svd.u[:, j] ** 2, 0.0)
        chosen = greedy_knapsack(vals, w.wf, th.w_cn)
        out[j] = vals[chosen].sum() if chosen else 0.0
    return out
