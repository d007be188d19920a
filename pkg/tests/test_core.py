"""Value objects and episode validation."""

import numpy as np
import pytest

from lefcert import CertConfig, Embedding, Episode, Metric, ThreatKind, ThreatModel, validate_episode
from lefcert.errors import (
    ConfigError,
    DimMismatchError,
    LabelOutOfRangeError,
    NormViolationError,
    ShapeMismatchError,
)
from helpers import basis_episode, unit


def test_embedding_requires_unit_norm():
    with pytest.raises(NormViolationError):
        Embedding(np.array([1.0, 1.0]))
    Embedding(np.array([1.0, 1.0]), normalized=False)  # opt-out is explicit


def test_embedding_values_are_frozen():
    e = unit([1.0, 2.0])
    with pytest.raises(ValueError):
        e.values[0] = 9.0


def test_threat_model_validation():
    ThreatModel()  # unbounded needs nothing
    with pytest.raises(ConfigError, match="NONPOSITIVE_SIGMA"):
        ThreatModel(kind=ThreatKind.L2_BALL, r=0.1, sigma=0.0, n_noise=10, alpha_conf=0.05)
    with pytest.raises(ConfigError):
        ThreatModel(kind=ThreatKind.L2_BALL, r=-1.0, sigma=1.0, n_noise=10, alpha_conf=0.05)
    with pytest.raises(ConfigError):
        ThreatModel(kind=ThreatKind.L2_BALL, r=0.1, sigma=1.0, n_noise=0, alpha_conf=0.05)
    with pytest.raises(ConfigError):
        ThreatModel(kind=ThreatKind.L2_BALL, r=0.1, sigma=1.0, n_noise=10, alpha_conf=1.5)


def test_l2ball_requires_l2_metric():
    threat = ThreatModel(kind=ThreatKind.L2_BALL, r=0.1, sigma=1.0, n_noise=10, alpha_conf=0.05)
    CertConfig(lam=0.0, m=0, metric=Metric.L2, threat=threat)
    with pytest.raises(ConfigError):
        CertConfig(lam=0.0, m=0, metric=Metric.COSINE, threat=threat)


def test_cert_config_rejects_negatives():
    with pytest.raises(ConfigError):
        CertConfig(lam=-1.0, m=0, metric=Metric.COSINE)
    with pytest.raises(ConfigError):
        CertConfig(lam=0.0, m=-1, metric=Metric.COSINE)
    with pytest.raises(ConfigError):
        CertConfig(lam=0.0, m=0, metric=Metric.COSINE, budget=-1)


def test_validate_episode_accepts_well_formed(tiny_episode):
    validate_episode(tiny_episode)
    assert tiny_episode.n_classes == 3
    assert tiny_episode.n_shots == 4
    assert tiny_episode.dim == 16


def test_validate_episode_rejects_ragged_support():
    e = basis_episode()
    ragged = Episode(
        support=(e.support[0], e.support[1][:2], e.support[2]),
        text=e.text,
        queries=e.queries,
        label_names=e.label_names,
    )
    with pytest.raises(ShapeMismatchError):
        validate_episode(ragged)


def test_validate_episode_rejects_dim_mismatch():
    e = basis_episode()
    bad_text = tuple(list(e.text[:-1]) + [unit([1.0, 0.0])])
    with pytest.raises(DimMismatchError):
        validate_episode(
            Episode(support=e.support, text=bad_text, queries=e.queries, label_names=e.label_names)
        )


def test_validate_episode_rejects_bad_label():
    e = basis_episode()
    bad_queries = tuple(list(e.queries[:-1]) + [(e.queries[-1][0], 99)])
    with pytest.raises(LabelOutOfRangeError):
        validate_episode(
            Episode(support=e.support, text=e.text, queries=bad_queries, label_names=e.label_names)
        )


def test_unlabeled_queries_are_allowed():
    e = basis_episode()
    anon = tuple((emb, None) for emb, _ in e.queries)
    validate_episode(
        Episode(support=e.support, text=e.text, queries=anon, label_names=e.label_names)
    )
