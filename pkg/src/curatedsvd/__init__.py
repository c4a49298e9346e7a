"""Recovery of low-rank model matrices from sparse observations."""
from .curated import (
    CuratedOutcome,
    Thresholds,
    curated_svd,
    curated_svd_once,
    greedy_knapsack,
    row_deletion,
    terminal_impacts,
    thresholds,
)
from .matrixio import read_matrix, read_model, read_observation, write_matrix
from .models import ModelSpec, gen_model, sample
from .oracles import EvalReport, collab_eval, normalized_l1
from .regularization import compute_weights, deregularize, regularize, weight_of_rows
from .spectral import ImpactTable, impact, rw_svd, spectral_norm, truncated_svd, zero_rows
from .types import (
    CuratedConfig,
    ModelKind,
    ModelMatrix,
    Observation,
    RegWeights,
    SvdResult,
    n_avg,
)

__version__ = "0.1.0"
