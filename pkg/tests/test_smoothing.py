"""Noise-averaged embeddings and the dual constraint parameters.

The Lipschitz factor sqrt(2/(pi sigma^2)) is checked empirically: for the
1-D map x -> E[sign(x + sigma Z)] embedded on a 2-sphere arc, the smoothed
coordinate's steepest slope approaches the bound, and no sampled pair may
exceed it.
"""

import math

import numpy as np
import pytest

from lefcert import (
    NoisySampleSet,
    ThreatKind,
    ThreatModel,
    dual_constraint_params,
    hoeffding_deviation,
    lipschitz_constant,
    smoothed_embedding,
)
from lefcert.errors import EmptySetError, NormViolationError, WrongThreatKindError


def _threat(n=1000, alpha=0.01, r=0.1, sigma=1.0):
    return ThreatModel(kind=ThreatKind.L2_BALL, r=r, sigma=sigma, n_noise=n, alpha_conf=alpha)


def test_smoothed_mean_stays_inside_unit_ball():
    rng = np.random.Generator(np.random.PCG64(0))
    raw = rng.normal(size=(50, 8))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    s = NoisySampleSet(raw, sigma=1.0)
    emb = smoothed_embedding(s)
    assert not emb.normalized
    assert np.linalg.norm(emb.values) <= 1.0 + 1e-12
    assert np.allclose(emb.values, raw.mean(axis=0))


def test_noisy_set_validation():
    with pytest.raises(EmptySetError):
        NoisySampleSet(np.zeros((0, 4)), sigma=1.0)
    with pytest.raises(NormViolationError):
        NoisySampleSet(np.ones((3, 4)), sigma=1.0)  # rows have norm 2


def test_dual_constraint_params_frozen():
    delta, t = dual_constraint_params(_threat())
    assert delta == pytest.approx(0.1 * math.sqrt(2.0 / math.pi), abs=1e-12)
    assert delta == pytest.approx(0.07978845608, abs=1e-9)
    assert t == pytest.approx(hoeffding_deviation(1000, 0.01, 2.0))
    assert t == pytest.approx(0.1029399, abs=1e-6)


def test_dual_constraint_needs_l2ball():
    with pytest.raises(WrongThreatKindError):
        dual_constraint_params(ThreatModel())


def test_hoeffding_flag_zeroes_the_widening():
    base = _threat()
    delta_on, t_on = dual_constraint_params(base)
    off = ThreatModel(
        kind=ThreatKind.L2_BALL, r=base.r, sigma=base.sigma, n_noise=base.n_noise,
        alpha_conf=base.alpha_conf, apply_hoeffding=False,
    )
    delta_off, t_off = dual_constraint_params(off)
    assert delta_off == delta_on  # the radius term is estimation-free
    assert t_on > 0.0
    assert t_off == 0.0


def test_lipschitz_bound_holds_empirically():
    """Smoothed coordinate map never moves faster than L(sigma) per unit input."""
    sigma = 0.7
    bound = lipschitz_constant(sigma)
    # E[sign(x + sigma Z)] = 1 - 2 Phi(-x/sigma); slope at 0 equals
    # sqrt(2/pi)/sigma = L(sigma), the supremum over x
    xs = np.linspace(-2.0, 2.0, 2001)
    phi = 0.5 * (1.0 + np.vectorize(math.erf)(xs / (sigma * math.sqrt(2.0))))
    smoothed = 2.0 * phi - 1.0
    slopes = np.abs(np.diff(smoothed) / np.diff(xs))
    assert slopes.max() <= bound + 1e-6
    assert slopes.max() == pytest.approx(bound, rel=1e-3)


def test_hoeffding_interval_covers_the_mean():
    """Empirical coverage of mean estimates is at least 1 - alpha."""
    rng = np.random.Generator(np.random.PCG64(42))
    n, alpha, runs = 400, 0.05, 500
    t = hoeffding_deviation(n, alpha, 2.0)
    true_mean = 1.0  # uniform on [0, 2]
    misses = 0
    for _ in range(runs):
        sample = rng.uniform(0.0, 2.0, size=n)
        if abs(sample.mean() - true_mean) > t:
            misses += 1
    assert misses / runs <= alpha
