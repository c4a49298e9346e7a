import math

import numpy as np
import pytest

from curatedsvd import lemmas, oracles
from curatedsvd.regularization import regularize
from curatedsvd.spectral import rw_svd
from curatedsvd.types import RegWeights


@pytest.mark.parametrize("name", list(lemmas.CHECKS))
def test_check_passes(name):
    rng = np.random.default_rng([0, list(lemmas.CHECKS).index(name)])
    result = lemmas.CHECKS[name](rng)
    assert result.passed, result.line()
    assert result.instances >= 200


def test_run_all_is_reproducible():
    a = lemmas.run_all(seed=3, n=20)
    b = lemmas.run_all(seed=3, n=20)
    assert a == b
    assert len(a) == len(lemmas.CHECKS)


def test_mutated_regularization_is_caught(monkeypatch):
    # a weaker power of the row weights, and no column weights at all
    monkeypatch.setattr(lemmas, "regularize", lambda a, w: np.asarray(a) / w.wf[:, None] ** 0.1)
    result = lemmas.check_dampcon(np.random.default_rng(0), n=100)
    assert not result.passed
    assert result.line().startswith("FAIL")


def test_recovery_constant_can_fail_for_distant_b():
    # B far from A: the rank-1 truncation keeps the wrong direction
    a = np.diag([1.0, 0.0])
    b = np.diag([0.5, 0.6])
    w = RegWeights.unit(2)
    lhs = np.abs(a - rw_svd(b, 1, w)).sum()
    noise = oracles.dense_spectral_norm(regularize(a - b, w))
    stated = math.sqrt(1 * 2 * 2) * noise
    proven = 2 * math.sqrt(2 * 1 * 2 * 2) * noise
    assert lhs == pytest.approx(1.6)
    assert lhs > stated
    assert lhs <= proven


def test_recovery_proven_constant_holds_for_arbitrary_b():
    rng = np.random.default_rng(7)
    for _ in range(500):
        k = int(rng.integers(2, 9))
        r = int(rng.integers(1, k + 1))
        a = rng.standard_normal((k, r)) @ rng.standard_normal((r, k))
        b = rng.standard_normal((k, k)) * rng.uniform(0.1, 3.0)
        w = RegWeights(1 + rng.exponential(1.0, k), 1 + rng.exponential(1.0, k))
        lhs = np.abs(a - rw_svd(b, r, w)).sum()
        noise = oracles.dense_spectral_norm(regularize(a - b, w))
        assert lhs <= 2 * math.sqrt(2 * r * w.wf.sum() * w.wb.sum()) * noise * (1 + 1e-9)
