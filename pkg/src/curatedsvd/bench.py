"""Experiment specs and runners behind the CLI: scaling, collab and counterexample grids.

Every runner returns plain row dicts with a fixed column set so CSV output
is identical across runs and thread counts.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .curated import curated_svd, terminal_impacts
from .models import ModelSpec, gen_model, sample
from .oracles import brute_knapsack, collab_eval, normalized_l1
from .regularization import compute_weights
from .spectral import rw_svd, truncated_svd
from .types import CuratedConfig, ModelKind, Observation, as_dense

BASELINES = ("plain_r_svd", "plain_2r_svd", "rw_svd_no_deletion")

SCALING_COLUMNS = [
    "row_type", "grid_value", "trial", "method", "normalized_l1", "mse",
    "zeroed_weight", "n_avg", "tau", "w_cn", "max_terminal_impact",
    "brute_terminal_impact", "restart_index", "slope",
]
COUNTEREXAMPLE_COLUMNS = [
    "row_type", "trial", "k", "n_max", "blocks", "zero_block_found",
    "zero_block_count", "certified_lower_bound", "empirical_probability",
]
BRUTE_CERTIFICATE_MAX_ROWS = 15


@dataclass(frozen=True)
class ExperimentSpec:
    model_spec: ModelSpec
    cfg: CuratedConfig
    trials: int = 1
    mass_grid: Optional[tuple] = None
    p_grid: Optional[tuple] = None
    baselines: tuple = ()
    output_path: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name, grid in (("mass_grid", self.mass_grid), ("p_grid", self.p_grid)):
            if grid is not None:
                g = np.asarray(grid, dtype=float)
                if g.size == 0 or g.min() <= 0 or np.any(np.diff(g) <= 0):
                    raise ValueError(f"{name} values must be positive and increasing")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ValueError(f"unknown baselines {sorted(unknown)}")


def derive_seed(seed: int, grid_index: int, trial: int) -> int:
    """Schedule-independent per-trial seed."""
    return int(np.random.SeedSequence([seed, grid_index, trial]).generate_state(1)[0])


# ------------------------------------------------------------- config io


def _as_list(value) -> Optional[tuple]:
    if value is None or value == "":
        return None
    if isinstance(value, str):
        return tuple(float(v) for v in value.replace(",", " ").split())
    return tuple(float(v) for v in value)


def _opt(section: dict, key, cast, default=None):
    value = section.get(key, default)
    if value is None or value == "":
        return default
    return cast(value)


def spec_from_dict(data: dict) -> ExperimentSpec:
    exp = dict(data.get("experiment", {}))
    model = dict(data.get("model", {}))
    obs = dict(data.get("observation", {}))
    cur = dict(data.get("curated", {}))
    param = obs.get("param")
    kind = ModelKind.parse(
        str(obs.get("kind", "poisson")), None if param in (None, "") else str(param)
    )
    seed = _opt(exp, "seed", int, 0)
    model_spec = ModelSpec(
        kind=str(model.get("family", "random_factors")),
        k=int(model["k"]),
        r=_opt(model, "r", int, 1),
        target_mass=_opt(model, "target_mass", float),
        seed=_opt(model, "seed", int, 0),
        model_kind=kind,
        p_in=_opt(model, "p_in", float, 0.5),
        p_out=_opt(model, "p_out", float, 0.1),
        count=_opt(model, "count", int, 5),
        boost=_opt(model, "boost", float, 100.0),
        n_max=_opt(model, "n_max", int, 1),
    )
    cfg = CuratedConfig(
        r=_opt(cur, "r", int, model_spec.r),
        c_tau=_opt(cur, "c_tau", float, 1.0),
        c_w=_opt(cur, "c_w", float, 1.0),
        restarts=_opt(cur, "restarts", int),
        seed=seed,
        n_total_override=_opt(cur, "n_total_override", float),
        svd_dense_threshold=_opt(cur, "svd_dense_threshold", int, 2048),
    )
    baselines = exp.get("baselines", ())
    if isinstance(baselines, str):
        baselines = [b for b in baselines.replace(",", " ").split() if b]
    return ExperimentSpec(
        model_spec=model_spec,
        cfg=cfg,
        trials=_opt(exp, "trials", int, 1),
        mass_grid=_as_list(exp.get("mass_grid")),
        p_grid=_as_list(exp.get("p_grid")),
        baselines=tuple(baselines),
        output_path=exp.get("output_path") or None,
        seed=seed,
    )


def load_spec(path) -> ExperimentSpec:
    """Read an experiment from an INI-style (``key = value`` sections) or JSON file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return spec_from_dict(json.loads(text))
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text, source=str(path))
    return spec_from_dict({name: dict(parser[name]) for name in parser.sections()})


def with_overrides(spec: ExperimentSpec, seed: Optional[int] = None, threads: Optional[int] = None) -> ExperimentSpec:
    cfg = spec.cfg
    if seed is not None:
        cfg = replace(cfg, seed=seed)
        spec = replace(spec, seed=seed)
    if threads is not None:
        cfg = replace(cfg, threads=threads)
    return replace(spec, cfg=cfg)


def write_csv(path, columns: Sequence[str], rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _cell(row.get(c)) for c in columns})


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return value


# --------------------------------------------------------- scaling runs


def _baseline_estimate(name: str, obs: Observation, r: int, navg: float) -> np.ndarray:
    k = obs.k
    if name == "plain_r_svd":
        return truncated_svd(obs.entries, min(r, k)).reconstruct()
    if name == "plain_2r_svd":
        return truncated_svd(obs.entries, min(2 * r, k)).reconstruct()
    w = compute_weights(obs, navg)
    return np.asarray(rw_svd(obs.entries, min(2 * r, k), w))


def _brute_certificate(outcome) -> Optional[float]:
    """Exact light-subset impact bound at termination, when few rows remain."""
    svd, w = outcome.final_svd, outcome.weights
    if svd is None:
        return None
    remaining = sorted(set(range(svd.u.shape[0])) - outcome.zeroed_rows)
    if len(remaining) > BRUTE_CERTIFICATE_MAX_ROWS:
        return None
    best = 0.0
    for j in range(svd.rank):
        vals = svd.sigma[j] ** 2 * svd.u[remaining, j] ** 2
        best = max(best, brute_knapsack(vals, w.wf[remaining], outcome.thresholds.w_cn)[1])
    return best


def _trial_rows(spec: ExperimentSpec, model, grid_index: int, grid_value: float, trial: int, f_true=None):
    seed = derive_seed(spec.seed, grid_index, trial)
    obs = sample(model, seed)
    cfg = replace(spec.cfg, seed=seed, threads=1)
    collab = model.model_kind.name == "collab"
    p = model.model_kind.param if collab else None

    def score(est):
        if collab:
            rep = collab_eval(f_true, est, p)
            return rep.normalized_l1, rep.mse
        return normalized_l1(model, est), None

    outcome = curated_svd(obs, cfg)
    l1, mse = score(outcome.estimate)
    impacts = terminal_impacts(outcome)
    th = outcome.thresholds
    navg = obs.total / obs.k if obs.total else 0.0
    rows = [{
        "row_type": "trial", "grid_value": grid_value, "trial": trial, "method": "curated",
        "normalized_l1": l1, "mse": mse, "zeroed_weight": outcome.zeroed_weight,
        "n_avg": navg, "tau": th.tau if th else None, "w_cn": th.w_cn if th else None,
        "max_terminal_impact": float(impacts.max()) if impacts.size else 0.0,
        "brute_terminal_impact": _brute_certificate(outcome),
        "restart_index": outcome.restart_index,
    }]
    for name in spec.baselines:
        est = np.zeros((obs.k, obs.k)) if navg == 0 else _baseline_estimate(name, obs, cfg.r, navg)
        b_l1, b_mse = score(est)
        rows.append({
            "row_type": "trial", "grid_value": grid_value, "trial": trial, "method": name,
            "normalized_l1": b_l1, "mse": b_mse, "n_avg": navg,
        })
    return rows


def fit_loglog_slope(x, y) -> Optional[float]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def summarize(rows: list[dict], saturation: float = 0.9) -> list[dict]:
    """Median rows per (grid value, method) and one slope row per method.

    The slope is fitted on grid points whose median error is below
    ``saturation``.
    """
    trial_rows = [r for r in rows if r["row_type"] == "trial"]
    methods = list(dict.fromkeys(r["method"] for r in trial_rows))
    grid = list(dict.fromkeys(r["grid_value"] for r in trial_rows))
    out = []
    for method in methods:
        xs, ys = [], []
        for g in grid:
            sel = [r for r in trial_rows if r["method"] == method and r["grid_value"] == g]
            med = float(np.median([r["normalized_l1"] for r in sel]))
            mses = [r["mse"] for r in sel if r.get("mse") is not None]
            out.append({
                "row_type": "median", "grid_value": g, "method": method,
                "normalized_l1": med, "mse": float(np.median(mses)) if mses else None,
            })
            if med < saturation:
                xs.append(g)
                ys.append(med)
        slope = fit_loglog_slope(xs, ys) if len(grid) >= 2 else None
        out.append({"row_type": "summary", "method": method, "slope": slope})
    return out


def run_scaling(spec: ExperimentSpec) -> list[dict]:
    """Trials over the mass grid (or the p grid for collab models), plus summaries."""
    base = spec.model_spec
    tasks = []
    if spec.p_grid is not None:
        if base.model_kind.name != "collab":
            raise ValueError("p_grid requires collab observations")
        for gi, p in enumerate(spec.p_grid):
            model = gen_model(replace(base, model_kind=ModelKind.collab(p)))
            f_true = model.dense() / p
            tasks += [(model, gi, p, t, f_true) for t in range(spec.trials)]
    else:
        grid = spec.mass_grid if spec.mass_grid is not None else (base.target_mass,)
        for gi, mass in enumerate(grid):
            model = gen_model(replace(base, target_mass=mass))
            f_true = model.dense() / model.model_kind.param if base.model_kind.name == "collab" else None
            tasks += [(model, gi, mass, t, f_true) for t in range(spec.trials)]

    def run(task):
        model, gi, value, t, f_true = task
        return _trial_rows(spec, model, gi, value, t, f_true)

    if spec.cfg.threads > 1:
        with ThreadPoolExecutor(spec.cfg.threads) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(task) for task in tasks]
    rows = [row for chunk in chunks for row in chunk]
    return rows + summarize(rows)


# ------------------------------------------------------ counterexample


def zero_block_count(obs: Observation, n_max: int) -> int:
    """Number of all-zero diagonal blocks of side 2 n_max in X.

    Only block-diagonal support is scanned; the counterexample model has no
    mass elsewhere.
    """
    side = 2 * n_max
    if obs.k % side:
        raise ValueError(f"2 * n_max = {side} must divide k = {obs.k}")
    blocks = obs.k // side
    coo = sp.coo_matrix(obs.entries)
    in_block = (coo.row // side) == (coo.col // side)
    hit = np.bincount(coo.row[in_block & (coo.data != 0)] // side, minlength=blocks)
    return int(np.count_nonzero(hit == 0))


def run_counterexample(k: int, n_max: int, trials: int, seed: int = 0, threads: int = 1) -> list[dict]:
    """Count all-zero blocks in Bernoulli draws of the block-diagonal counterexample.

    An all-zero observed block B_hat = 0 gives ||X - M|| >= ||B|| = n_max by
    interlacing, so each such trial certifies that lower bound.
    """
    model = gen_model(ModelSpec("counterexample", k=k, n_max=n_max, model_kind=ModelKind.bernoulli()))
    blocks = k // (2 * n_max)

    def run(t):
        count = zero_block_count(sample(model, derive_seed(seed, 0, t)), n_max)
        return {
            "row_type": "trial", "trial": t, "k": k, "n_max": n_max, "blocks": blocks,
            "zero_block_found": count > 0, "zero_block_count": count,
            "certified_lower_bound": float(n_max) if count else 0.0,
        }

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(run, range(trials)))
    else:
        rows = [run(t) for t in range(trials)]
    found = sum(r["zero_block_found"] for r in rows)
    rows.append({
        "row_type": "summary", "k": k, "n_max": n_max, "blocks": blocks,
        "empirical_probability": found / trials,
    })
    return rows


def block_zero_probability(n_max: int) -> float:
    """P(an all-1/2 block of side 2 n_max is observed as all zeros)."""
    return 0.5 ** (4 * n_max * n_max)


def dense_noise_norm(obs: Observation, model) -> float:
    """||X - M|| by dense SVD; small k only."""
    return float(np.linalg.norm(as_dense(obs.entries) - model.dense(), 2))


def median_by(rows, method, grid_value=None):
    sel = [
        r["normalized_l1"] for r in rows
        if r["row_type"] == "trial" and r["method"] == method
        and (grid_value is None or r["grid_value"] == grid_value)
    ]
    return float(np.median(sel)) if sel else math.nan
