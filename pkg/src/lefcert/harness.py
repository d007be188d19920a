"""Synthetic data and evaluation protocols.

All randomness flows through numpy's PCG64 generator seeded explicitly, and
per-episode seeds derive from the root seed through SeedSequence, so results
are reproducible across platforms and independent of evaluation order.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bounds import table_from_bundle
from .certify import certify_sample
from .collective import _search_worst_allocation
from .core import CertConfig, Embedding, Episode, Metric, ThreatKind, validate_episode
from .distance import l2_distance, metric_info, normalize
from .errors import AnchorSamplingFailedError, InvalidParameterError, PoolTooSmallError
from .scoring import build_score_bundle, episode_max_norm, scores_from_bundle

__all__ = [
    "EmbeddingPool",
    "RunMetrics",
    "SweepRecord",
    "generate_synthetic_pool",
    "sample_episode",
    "run_default_protocol",
    "run_collective_protocol",
    "sweep",
]

_ANCHOR_REJECT_LIMIT = 10**4


@dataclass(frozen=True)
class EmbeddingPool:
    """Labeled member embeddings plus one text anchor per class."""

    classes: dict[str, tuple[Embedding, ...]]
    text: dict[str, Embedding]

    def __post_init__(self):
        object.__setattr__(
            self, "classes", {k: tuple(v) for k, v in self.classes.items()}
        )
        object.__setattr__(self, "text", dict(self.text))


@dataclass(frozen=True)
class RunMetrics:
    """Pooled accuracy metrics of one protocol run.

    certified_accuracy maps each budget T to the fraction of queries that are
    simultaneously correct and certified at T.
    """

    clean_accuracy: float
    certified_accuracy: dict[int, float]
    runtime_seconds: float
    episodes: int
    seed: int


@dataclass(frozen=True)
class SweepRecord:
    protocol: str
    T: int
    M: int
    lam: float
    metric: str
    clean_acc: float
    cert_acc: float
    runtime_s: float
    seed: int

    def as_row(self) -> dict:
        return {
            "protocol": self.protocol,
            "T": self.T,
            "M": self.M,
            "lambda": self.lam,
            "metric": self.metric,
            "clean_acc": self.clean_acc,
            "cert_acc": self.cert_acc,
            "runtime_s": self.runtime_s,
            "seed": self.seed,
        }


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _child_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def generate_synthetic_pool(
    n_classes: int,
    per_class: int,
    dim: int,
    intra_spread: float,
    inter_gap: float,
    text_offset: float,
    seed: int = 0,
) -> EmbeddingPool:
    """Unit-sphere class clusters with a minimum anchor separation.

    Each class gets a unit anchor; anchors are rejection-resampled until all
    pairwise l2 distances reach ``inter_gap``.  Members are the anchor plus
    isotropic Gaussian noise of scale ``intra_spread``, re-normalized; text
    anchors use ``text_offset`` the same way.
    """
    if n_classes < 1 or per_class < 1 or dim < 1:
        raise InvalidParameterError("n_classes, per_class and dim must be positive")
    if intra_spread < 0 or inter_gap < 0 or text_offset < 0:
        raise InvalidParameterError("spreads and gaps must be nonnegative")
    rng = _rng(seed)
    anchors: list[np.ndarray] = []
    rejections = 0
    while len(anchors) < n_classes:
        cand = rng.standard_normal(dim)
        cand /= np.linalg.norm(cand)
        if all(l2_distance(cand, a) >= inter_gap for a in anchors):
            anchors.append(cand)
        else:
            rejections += 1
            if rejections > _ANCHOR_REJECT_LIMIT:
                raise AnchorSamplingFailedError(
                    f"no anchor placement found after {_ANCHOR_REJECT_LIMIT} rejections "
                    f"(classes={n_classes}, dim={dim}, inter_gap={inter_gap})"
                )

    def jitter(base: np.ndarray, scale: float) -> Embedding:
        if scale == 0.0:
            return normalize(base)
        return normalize(base + scale * rng.standard_normal(dim))

    classes = {}
    text = {}
    for ci, anchor in enumerate(anchors):
        name = f"class{ci + 1:02d}"
        classes[name] = tuple(jitter(anchor, intra_spread) for _ in range(per_class))
        text[name] = jitter(anchor, text_offset)
    return EmbeddingPool(classes=classes, text=text)


def sample_episode(
    pool: EmbeddingPool,
    n_classes: int,
    n_shots: int,
    queries_per_class: int,
    seed,
) -> Episode:
    """Draw a C-way K-shot episode with disjoint support and query members."""
    names = sorted(pool.classes)
    if len(names) < n_classes:
        raise PoolTooSmallError(f"pool has {len(names)} classes, episode needs {n_classes}")
    need = n_shots + queries_per_class
    rng = _rng(seed)
    chosen = [names[i] for i in rng.choice(len(names), size=n_classes, replace=False)]
    support = []
    queries = []
    for ci, name in enumerate(chosen):
        members = pool.classes[name]
        if len(members) < need:
            raise PoolTooSmallError(
                f"class {name} has {len(members)} members, episode needs {need}"
            )
        picks = rng.choice(len(members), size=need, replace=False)
        support.append(tuple(members[i] for i in picks[:n_shots]))
        queries.extend((members[i], ci + 1) for i in picks[n_shots:])
    return Episode(
        support=tuple(support),
        text=tuple(pool.text[name] for name in chosen),
        queries=tuple(queries),
        label_names=tuple(chosen),
    )


def _certify_queries(e: Episode, cfg: CertConfig, jobs: int = 1):
    """Per-query (correct, certified-at-T flags for T in 0..budget)."""
    minfo = metric_info(cfg.metric, episode_max_norm(e))

    def one(qi: int):
        bundle = build_score_bundle(e, qi, minfo)
        scores = scores_from_bundle(bundle, cfg)
        table = table_from_bundle(bundle, cfg)
        true_label = e.queries[qi][1]
        correct = None if true_label is None else scores.predicted == true_label
        flags = [
            certify_sample(scores, table, t).certified for t in range(cfg.budget + 1)
        ]
        return correct, flags

    indices = range(len(e.queries))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, indices))
    return [one(qi) for qi in indices]


def run_default_protocol(
    pool: EmbeddingPool,
    cfg: CertConfig,
    episodes: int = 10,
    seed: int = 0,
    n_classes: int = 5,
    n_shots: int = 10,
    queries_per_class: int = 1,
    jobs: int = 1,
) -> RunMetrics:
    """Sample ``episodes`` tasks and pool per-query metrics across all of them."""
    start = time.perf_counter()
    total = 0
    labeled = 0
    correct_n = 0
    cert_n = np.zeros(cfg.budget + 1, dtype=np.int64)
    for ei in range(episodes):
        e = sample_episode(pool, n_classes, n_shots, queries_per_class, _child_seed(seed, ei))
        validate_episode(e)
        for correct, flags in _certify_queries(e, cfg, jobs):
            total += 1
            if correct is not None:
                labeled += 1
                correct_n += int(correct)
                cert_n += np.array([int(correct and f) for f in flags])
    if labeled == 0:
        raise PoolTooSmallError("protocol produced no labeled queries")
    return RunMetrics(
        clean_accuracy=correct_n / labeled,
        certified_accuracy={t: float(cert_n[t]) / labeled for t in range(cfg.budget + 1)},
        runtime_seconds=time.perf_counter() - start,
        episodes=episodes,
        seed=seed,
    )


def run_collective_protocol(
    pool: EmbeddingPool,
    cfg: CertConfig,
    seed: int = 0,
    n_classes: int = 5,
    n_shots: int = 10,
    queries_per_class: int = 20,
    jobs: int = 1,
) -> RunMetrics:
    """One episode, many queries, one shared attacker budget.

    For each T the worst single allocation is found; a query counts toward
    certified accuracy when it is correct and survives that allocation.
    """
    start = time.perf_counter()
    e = sample_episode(pool, n_classes, n_shots, queries_per_class, _child_seed(seed, 0))
    validate_episode(e)
    minfo = metric_info(cfg.metric, episode_max_norm(e))

    def one(qi: int):
        bundle = build_score_bundle(e, qi, minfo)
        scores = scores_from_bundle(bundle, cfg)
        return scores.predicted, table_from_bundle(bundle, cfg)

    indices = range(len(e.queries))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as tp:
            rows = list(tp.map(one, indices))
    else:
        rows = [one(qi) for qi in indices]
    predictions = [pred for pred, _ in rows]
    tables = [table for _, table in rows]
    correct = np.array(
        [pred == e.queries[qi][1] for qi, pred in enumerate(predictions)]
    )
    cert_acc = {}
    for t in range(cfg.budget + 1):
        res = _search_worst_allocation(tables, predictions, e.n_classes, t)
        survived = ~np.array(res.per_query_broken)
        cert_acc[t] = float((correct & survived).mean())
    return RunMetrics(
        clean_accuracy=float(correct.mean()),
        certified_accuracy=cert_acc,
        runtime_seconds=time.perf_counter() - start,
        episodes=1,
        seed=seed,
    )


def sweep(
    pool: EmbeddingPool,
    cfg: CertConfig,
    t_values: list[int],
    m_values: list[int],
    lambda_values: list[float],
    seed: int = 0,
    protocol: str = "default",
    episodes: int = 10,
    n_classes: int = 5,
    n_shots: int = 10,
    queries_per_class: int | None = None,
    jobs: int = 1,
) -> list[SweepRecord]:
    """Cross product of (m, lambda) cells, every cell re-run with the same seed
    so curves are paired.  Emits one record per requested T."""
    if not t_values or min(t_values) < 0:
        raise InvalidParameterError("t_values must be nonempty and nonnegative")
    if protocol not in ("default", "collective"):
        raise InvalidParameterError(f"unknown protocol {protocol!r}")
    budget = max(t_values)
    records = []
    for m in m_values:
        for lam in lambda_values:
            cell = replace(cfg, m=m, lam=lam, budget=budget)
            if protocol == "default":
                qpc = 1 if queries_per_class is None else queries_per_class
                metrics = run_default_protocol(
                    pool, cell, episodes=episodes, seed=seed,
                    n_classes=n_classes, n_shots=n_shots,
                    queries_per_class=qpc, jobs=jobs,
                )
            else:
                qpc = 20 if queries_per_class is None else queries_per_class
                metrics = run_collective_protocol(
                    pool, cell, seed=seed,
                    n_classes=n_classes, n_shots=n_shots,
                    queries_per_class=qpc, jobs=jobs,
                )
            for t in t_values:
                records.append(
                    SweepRecord(
                        protocol=protocol,
                        T=t,
                        M=m,
                        lam=lam,
                        metric=cfg.metric.value,
                        clean_acc=metrics.clean_accuracy,
                        cert_acc=metrics.certified_accuracy[t],
                        runtime_s=metrics.runtime_seconds,
                        seed=seed,
                    )
                )
    return records
