"""Synthetic low-rank model matrices and the five observation samplers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .types import SPARSE_ENTRY_LIMIT, ModelKind, ModelMatrix, Observation

MODEL_FAMILIES = ("random_factors", "sbm", "heavy_rows", "counterexample")


@dataclass(frozen=True)
class ModelSpec:
    """Recipe for a synthetic model matrix.

    ``target_mass`` is the desired ||M||_1. It may be left unset for
    collab models (F is then scaled to max entry 1 and M = p F), for
    distribution models (mass n) and for counterexamples (mass k * n_max).
    """

    kind: str
    k: int
    r: int = 1
    target_mass: Optional[float] = None
    seed: int = 0
    model_kind: ModelKind = ModelKind.poisson()
    p_in: float = 0.5
    p_out: float = 0.1
    count: int = 5
    boost: float = 100.0
    n_max: int = 1

    def __post_init__(self):
        if self.kind not in MODEL_FAMILIES:
            raise ValueError(f"unknown model family {self.kind!r}; choose from {MODEL_FAMILIES}")
        if self.k < 1 or self.r < 1:
            raise ValueError("k and r must be positive")
        if self.target_mass is not None and self.target_mass <= 0:
            raise ValueError("target_mass must be positive")
        if self.model_kind.name == "bernoulli" and self.target_mass is not None:
            if self.target_mass > self.k**2:
                raise ValueError("bernoulli target_mass cannot exceed k^2")


def _scale_to_mass(m: np.ndarray, spec: ModelSpec) -> np.ndarray:
    kind = spec.model_kind
    if kind.name == "collab":
        f = m / m.max()
        if spec.target_mass is not None:
            f = f * (spec.target_mass / (kind.param * f.sum()))
        return kind.param * f
    mass = spec.target_mass
    if kind.name == "distribution":
        if mass is not None and not np.isclose(mass, kind.param):
            raise ValueError("distribution models have mass n; target_mass must equal n")
        mass = float(kind.param)
    if mass is None:
        raise ValueError(f"target_mass is required for {spec.kind} with {kind.name} observations")
    return m * (mass / m.sum())


def _random_factors(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    u = rng.uniform(0.0, 1.0, size=(spec.k, spec.r))
    v = rng.uniform(0.0, 1.0, size=(spec.r, spec.k))
    return u @ v


def _sbm(spec: ModelSpec) -> np.ndarray:
    labels = np.arange(spec.k) * spec.r // spec.k
    b = np.full((spec.r, spec.r), spec.p_out) + (spec.p_in - spec.p_out) * np.eye(spec.r)
    return b[labels][:, labels]


def _counterexample(spec: ModelSpec):
    side = 2 * spec.n_max
    if spec.k % side:
        raise ValueError(f"2 * n_max = {side} must divide k = {spec.k}")
    blocks = spec.k // side
    block = np.full((side, side), 0.5)
    m = sp.block_diag([block] * blocks, format="csr") if spec.k**2 > SPARSE_ENTRY_LIMIT else None
    if m is None:
        m = np.kron(np.eye(blocks), block)
    return m, blocks


def gen_model(spec: ModelSpec) -> ModelMatrix:
    """Build the model matrix described by ``spec``.

    Counterexample models are block diagonal with all-1/2 blocks of side
    2 n_max; their rank is the block count, which overrides ``spec.r``.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "counterexample":
        m, blocks = _counterexample(spec)
        return ModelMatrix(k=spec.k, r=blocks, entries=m, model_kind=spec.model_kind)
    if spec.kind == "random_factors":
        m = _random_factors(spec, rng)
    elif spec.kind == "sbm":
        m = _sbm(spec)
    else:
        m = _random_factors(spec, rng)
        heavy = rng.choice(spec.k, size=min(spec.count, spec.k), replace=False)
        m[heavy] *= spec.boost
    m = _scale_to_mass(m, spec)
    hi = spec.model_kind.upper_bound
    if m.max() > hi:
        raise ValueError(
            f"target mass not achievable: largest entry {m.max():.4g} exceeds "
            f"the {spec.model_kind.name} bound {hi:g}"
        )
    return ModelMatrix(k=spec.k, r=spec.r, entries=m, model_kind=spec.model_kind)


def heavy_row_indices(spec: ModelSpec) -> np.ndarray:
    """The rows boosted by a heavy_rows spec (same draw order as gen_model)."""
    rng = np.random.default_rng(spec.seed)
    _random_factors(spec, rng)
    return np.sort(rng.choice(spec.k, size=min(spec.count, spec.k), replace=False))


def _draw(kind: ModelKind, m: np.ndarray, rng: np.random.Generator, exact_multinomial: bool):
    name = kind.name
    if name == "poisson":
        return rng.poisson(m).astype(float)
    if name == "bernoulli":
        return (rng.random(m.shape) < m).astype(float)
    if name == "binomial":
        t = kind.param
        return rng.binomial(t, np.clip(m / t, 0.0, 1.0)).astype(float)
    if name == "distribution":
        if exact_multinomial:
            n = kind.param
            return rng.multinomial(n, m / m.sum()).astype(float)
        return rng.poisson(m).astype(float)
    # collab: X = 1{observed} * Y, E[Y] = F, Y in [0, 1]
    p = kind.param
    f = m / p
    half_width = np.minimum(f, 1.0 - f)
    y = np.clip(f + rng.uniform(-1.0, 1.0, size=m.shape) * half_width, 0.0, 1.0)
    observed = rng.random(m.shape) < p
    return np.where(observed, y, 0.0)


def sample(
    model: ModelMatrix, seed: int, exact_multinomial: bool = False
) -> Observation:
    """Draw one observation X ~ M, independently per entry.

    Entries where M is zero are zero in X under every model, so only the
    support of M is sampled. Distribution models are Poissonized unless
    ``exact_multinomial`` is set, in which case exactly n samples are
    spread by a single multinomial draw.
    """
    rng = np.random.default_rng(seed)
    kind = model.model_kind
    entries = model.entries
    if sp.issparse(entries):
        x = entries.copy()
        x.data = _draw(kind, np.array(entries.data), rng, exact_multinomial)
        x.eliminate_zeros()
    else:
        m = np.asarray(entries)
        support = m > 0
        x = np.zeros_like(m)
        x[support] = _draw(kind, m[support], rng, exact_multinomial)
    return Observation(k=model.k, entries=x, model_kind=kind, r=model.r)
