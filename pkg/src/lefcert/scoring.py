"""Hybrid trimmed-mean scoring.

The score of class c for a test feature f is

    R_c = sum_{i=M+1}^{K-M} p_i  +  (lam / (K - 2M)) * (sum_{i=M+1}^{K-M} q_i) * d_text_c

with p = sorted query-to-shot distances, q = sorted shot-to-text distances,
both ascending, and d_text_c the query-to-text distance.  Prediction picks the
smallest score; ties go to the lowest class index.  lam = 0 degenerates to a
pure trimmed feature-distance score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Episode, CertConfig, Embedding, ScoreBundle, validate_episode
from .distance import MetricInfo, distance_fn
from .errors import LabelOutOfRangeError, MTooLargeError

__all__ = [
    "ClassScores",
    "build_score_bundle",
    "trimmed_sum",
    "class_score",
    "scores_from_bundle",
    "predict",
]


@dataclass(frozen=True)
class ClassScores:
    """Scores of one query against every class; ``predicted`` is 1-based."""

    scores: np.ndarray
    predicted: int
    alpha: np.ndarray


def episode_max_norm(e: Episode) -> float:
    norms = [emb.norm for row in e.support for emb in row]
    norms.extend(emb.norm for emb in e.text)
    norms.extend(emb.norm for emb, _ in e.queries)
    return max(norms)


def build_score_bundle(e: Episode, query_index: int, metric: MetricInfo) -> ScoreBundle:
    """Compute all distances the score and its bounds need for one query."""
    validate_episode(e)
    if not (0 <= query_index < len(e.queries)):
        raise LabelOutOfRangeError(f"query index {query_index} out of range")
    dist = distance_fn(metric.kind)
    query = e.queries[query_index][0]
    c, k = e.n_classes, e.n_shots
    p_raw = np.empty((c, k))
    q_raw = np.empty((c, k))
    d_text = np.empty(c)
    for ci in range(c):
        anchor = e.text[ci]
        for ki, shot in enumerate(e.support[ci]):
            p_raw[ci, ki] = dist(query, shot)
            q_raw[ci, ki] = dist(shot, anchor)
        d_text[ci] = dist(query, anchor)
    return ScoreBundle(
        p=np.sort(p_raw, axis=1),
        q=np.sort(q_raw, axis=1),
        d_text=d_text,
        range_max=metric.range_max,
        p_raw=p_raw,
        q_raw=q_raw,
    )


def check_trim(k: int, m: int) -> None:
    if not (0 <= m <= (k - 1) // 2):
        raise MTooLargeError(f"m={m} outside 0..{(k - 1) // 2} for K={k}")


def trimmed_sum(s, m: int) -> float:
    """Sum of the window s[m+1 .. K-m] (1-based) of an ascending sequence."""
    arr = np.asarray(s, dtype=np.float64)
    check_trim(arr.shape[-1], m)
    k = arr.shape[-1]
    return float(arr[m : k - m].sum())


def class_score(bundle: ScoreBundle, c: int, cfg: CertConfig) -> float:
    """R_c for 1-based class c."""
    if not (1 <= c <= bundle.n_classes):
        raise LabelOutOfRangeError(f"class {c} out of 1..{bundle.n_classes}")
    k = bundle.n_shots
    check_trim(k, cfg.m)
    ci = c - 1
    feat = trimmed_sum(bundle.p[ci], cfg.m)
    text = cfg.lam / (k - 2 * cfg.m) * trimmed_sum(bundle.q[ci], cfg.m) * bundle.d_text[ci]
    return feat + text


def scores_from_bundle(bundle: ScoreBundle, cfg: CertConfig) -> ClassScores:
    k = bundle.n_shots
    check_trim(k, cfg.m)
    m = cfg.m
    window = slice(m, k - m)
    feat = bundle.p[:, window].sum(axis=1)
    alpha = cfg.lam / (k - 2 * m) * bundle.q[:, window].sum(axis=1)
    scores = feat + alpha * bundle.d_text
    scores.setflags(write=False)
    alpha.setflags(write=False)
    # np.argmin returns the first minimum, which is the lowest-index tie-break
    return ClassScores(scores=scores, predicted=int(np.argmin(scores)) + 1, alpha=alpha)


def predict(e: Episode, query_index: int, cfg: CertConfig, metric: MetricInfo) -> ClassScores:
    bundle = build_score_bundle(e, query_index, metric)
    return scores_from_bundle(bundle, cfg)
