"""Distance kernels and metric metadata.

Both kernels accept :class:`~lefcert.core.Embedding` values or plain arrays.
For unit vectors the two metrics are linked by ``l2(a, b)^2 == 2 * cosine(a, b)``,
which the test suite checks to 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Embedding, Metric
from .errors import DimMismatchError, ZeroVectorError

_ZERO_TOL = 1e-12
_NORM_SLACK = 1e-9


@dataclass(frozen=True)
class MetricInfo:
    """A metric plus the largest distance it can produce on the given inputs."""

    kind: Metric
    range_max: float


def metric_info(kind: Metric, max_norm: float | None = None) -> MetricInfo:
    """Resolve the distance range for ``kind``.

    Cosine distance lives in [0, 2] regardless of scale.  The l2 distance is
    bounded by 2 only when every participating vector has norm at most 1
    (exact unit vectors, or smoothed means whose norm shrinks below 1);
    otherwise the range is unbounded.
    """
    if kind == Metric.COSINE:
        return MetricInfo(kind, 2.0)
    if max_norm is not None and max_norm <= 1.0 + _NORM_SLACK:
        return MetricInfo(kind, 2.0)
    return MetricInfo(kind, float("inf"))


def _vals(x) -> np.ndarray:
    if isinstance(x, Embedding):
        return x.values
    return np.asarray(x, dtype=np.float64)


def cosine_distance(a, b) -> float:
    """1 - cos(a, b), clamped into [0, 2] against rounding drift."""
    va, vb = _vals(a), _vals(b)
    if va.shape != vb.shape:
        raise DimMismatchError(f"{va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na < _ZERO_TOL or nb < _ZERO_TOL:
        raise ZeroVectorError("cosine distance is undefined for zero vectors")
    d = 1.0 - float(np.dot(va, vb)) / (na * nb)
    return min(2.0, max(0.0, d))


def l2_distance(a, b) -> float:
    va, vb = _vals(a), _vals(b)
    if va.shape != vb.shape:
        raise DimMismatchError(f"{va.shape} vs {vb.shape}")
    return float(np.linalg.norm(va - vb))


def normalize(v) -> Embedding:
    """Project ``v`` onto the unit sphere."""
    arr = _vals(v)
    norm = float(np.linalg.norm(arr))
    if norm < _ZERO_TOL:
        raise ZeroVectorError("cannot normalize a zero vector")
    return Embedding(arr / norm, normalized=True)


def distance_fn(kind: Metric):
    return cosine_distance if kind == Metric.COSINE else l2_distance
