"""Core value types for the certification engine.

Everything here is an immutable value: numpy payloads are stored read-only and
collections are tuples, so episodes and configs can be shared freely between
worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    ConfigError,
    DimMismatchError,
    InvalidParameterError,
    LabelOutOfRangeError,
    NonpositiveSigmaError,
    NormViolationError,
    ShapeMismatchError,
)

UNIT_NORM_TOL = 1e-6


class Metric(str, Enum):
    COSINE = "cosine"
    L2 = "l2"


class ThreatKind(str, Enum):
    UNBOUNDED = "unbounded"
    L2_BALL = "l2ball"


def _readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Embedding:
    """A single feature or text vector.

    ``normalized=True`` asserts the vector sits on the unit sphere; the
    constructor re-checks rather than silently renormalizing.
    """

    values: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        arr = _readonly(self.values)
        if arr.ndim != 1 or arr.size == 0:
            raise ShapeMismatchError("embedding must be a non-empty 1-D vector")
        object.__setattr__(self, "values", arr)
        if self.normalized:
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise NormViolationError(
                    f"embedding flagged normalized has norm {norm:.9f}"
                )

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class ThreatModel:
    """Attacker model: unbounded replacement, or displacement inside an l2 ball.

    The l2-ball variant describes poisoned samples whose smoothed embeddings
    move at most ``lipschitz_constant(sigma) * r`` from the clean ones; the
    smoothed means are estimated from ``n_noise`` draws, so bound construction
    also widens every distance by a Hoeffding term at confidence
    ``1 - alpha_conf``.  ``apply_hoeffding=False`` disables that widening for
    ablation runs.
    """

    kind: ThreatKind = ThreatKind.UNBOUNDED
    r: float = 0.0
    sigma: float = 0.0
    n_noise: int = 0
    alpha_conf: float = 0.0
    apply_hoeffding: bool = True

    def __post_init__(self):
        if self.kind == ThreatKind.L2_BALL:
            if self.sigma <= 0:
                raise NonpositiveSigmaError(f"sigma={self.sigma}")
            if self.r <= 0:
                raise InvalidParameterError(f"l2-ball radius must be positive, got {self.r}")
            if self.n_noise < 1:
                raise InvalidParameterError(f"n_noise must be >= 1, got {self.n_noise}")
            if not (0.0 < self.alpha_conf < 1.0):
                raise InvalidParameterError(
                    f"alpha_conf must lie in (0, 1), got {self.alpha_conf}"
                )


@dataclass(frozen=True)
class CertConfig:
    """Scoring and certification parameters.

    lam     weight of the text-distance term (0 recovers the feature-only score)
    m       per-side trim count of the trimmed mean
    budget  total poisoning budget T being certified against
    """

    lam: float
    m: int
    metric: Metric
    threat: ThreatModel = field(default_factory=ThreatModel)
    budget: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidParameterError(f"lam must be >= 0, got {self.lam}")
        if self.m < 0:
            raise InvalidParameterError(f"m must be >= 0, got {self.m}")
        if self.budget < 0:
            raise InvalidParameterError(f"budget must be >= 0, got {self.budget}")
        if self.threat.kind == ThreatKind.L2_BALL and self.metric != Metric.L2:
            raise ConfigError("the l2-ball threat model requires the l2 metric")


@dataclass(frozen=True)
class Episode:
    """One C-way K-shot task: support shots, per-class text anchors, queries.

    Class labels are 1-based everywhere in the public API.  A query's true
    label may be None when the source file carried no label; such queries are
    certified but excluded from accuracy metrics.
    """

    support: tuple[tuple[Embedding, ...], ...]
    text: tuple[Embedding, ...]
    queries: tuple[tuple[Embedding, int | None], ...]
    label_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(tuple(row) for row in self.support))
        object.__setattr__(self, "text", tuple(self.text))
        object.__setattr__(self, "queries", tuple(tuple(qp) for qp in self.queries))
        object.__setattr__(self, "label_names", tuple(self.label_names))

    @property
    def n_classes(self) -> int:
        return len(self.support)

    @property
    def n_shots(self) -> int:
        return len(self.support[0]) if self.support else 0

    @property
    def dim(self) -> int:
        return self.support[0][0].dim


def validate_episode(e: Episode) -> None:
    """Raise a typed error unless ``e`` is structurally sound."""
    if e.n_classes < 1:
        raise ShapeMismatchError("episode has no classes")
    if len(e.text) != e.n_classes:
        raise ShapeMismatchError(
            f"{e.n_classes} classes but {len(e.text)} text embeddings"
        )
    if len(e.label_names) != e.n_classes:
        raise ShapeMismatchError(
            f"{e.n_classes} classes but {len(e.label_names)} label names"
        )
    k = e.n_shots
    if k < 1:
        raise ShapeMismatchError("support rows must hold at least one shot")
    for ci, row in enumerate(e.support):
        if len(row) != k:
            raise ShapeMismatchError(
                f"class {ci + 1} has {len(row)} shots, expected {k}"
            )
    dim = e.support[0][0].dim
    everything = [emb for row in e.support for emb in row]
    everything.extend(e.text)
    everything.extend(emb for emb, _ in e.queries)
    for emb in everything:
        if emb.dim != dim:
            raise DimMismatchError(f"expected dim {dim}, found {emb.dim}")
    for qi, (_, label) in enumerate(e.queries):
        if label is not None and not (1 <= label <= e.n_classes):
            raise LabelOutOfRangeError(
                f"query {qi} has true label {label}, valid range is 1..{e.n_classes}"
            )


@dataclass(frozen=True)
class ScoreBundle:
    """Per-query distance summaries every downstream computation consumes.

    p[c] holds the query-to-shot distances of class c+1 sorted ascending,
    q[c] the shot-to-text distances sorted ascending, and d_text[c] the
    attack-invariant query-to-text distance.  The ``*_raw`` twins keep the
    original shot order so displacement-style bounds can pair p_i with q_i.
    """

    p: np.ndarray
    q: np.ndarray
    d_text: np.ndarray
    range_max: float
    p_raw: np.ndarray
    q_raw: np.ndarray

    def __post_init__(self):
        for name in ("p", "q", "d_text", "p_raw", "q_raw"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.p.shape != self.q.shape or self.p.ndim != 2:
            raise ShapeMismatchError("p and q must be matching (C, K) matrices")
        if self.d_text.shape != (self.p.shape[0],):
            raise ShapeMismatchError("d_text must hold one entry per class")

    @property
    def n_classes(self) -> int:
        return self.p.shape[0]

    @property
    def n_shots(self) -> int:
        return self.p.shape[1]
