"""Collective certification: one shared budget, many queries.

The attacker commits to a single allocation of the budget across classes
before the queries are evaluated, so the worst case is the allocation that
simultaneously breaks the most queries, not the per-query worst split.  The
exhaustive search below enumerates every allocation (a_1..a_C) with
sum(a) <= T in lexicographic order and keeps the first one attaining the
maximum break count B_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .bounds import BoundTable, table_from_bundle
from .core import CertConfig, Episode, validate_episode
from .distance import metric_info
from .errors import ConfigTooLargeError, InvalidParameterError, TableTooSmallError
from .scoring import build_score_bundle, episode_max_norm, scores_from_bundle

__all__ = [
    "CollectiveResult",
    "enumerate_allocations",
    "query_breaks_under",
    "collective_certify",
]

ALLOCATION_LIMIT = 10**7


@dataclass(frozen=True)
class CollectiveResult:
    """Worst allocation found, the queries it breaks, and the survival ratio."""

    b_max: int
    allocation: tuple[int, ...]
    per_query_broken: tuple[bool, ...]
    certified_ratio: float


def _alloc_iter(n_classes: int, total: int) -> Iterator[tuple[int, ...]]:
    if n_classes == 1:
        for t in range(total + 1):
            yield (t,)
        return
    for first in range(total + 1):
        for rest in _alloc_iter(n_classes - 1, total - first):
            yield (first,) + rest


def enumerate_allocations(n_classes: int, total: int) -> list[tuple[int, ...]]:
    """All C-tuples of nonnegative ints with sum <= total, lexicographic."""
    if n_classes < 1:
        raise InvalidParameterError(f"n_classes must be >= 1, got {n_classes}")
    if total < 0:
        raise InvalidParameterError(f"total must be >= 0, got {total}")
    count = math.comb(total + n_classes, n_classes)
    if count > ALLOCATION_LIMIT:
        raise ConfigTooLargeError(
            f"C({total + n_classes},{n_classes}) = {count} allocations exceed {ALLOCATION_LIMIT}"
        )
    return list(_alloc_iter(n_classes, total))


def query_breaks_under(
    tables: Sequence[BoundTable],
    predictions: Sequence[int],
    allocation: Sequence[int],
) -> np.ndarray:
    """Boolean flags: query i breaks when the attacked score of its predicted
    class can reach the attacked score of some rival under this allocation."""
    alloc = np.asarray(allocation, dtype=np.intp)
    flags = np.empty(len(tables), dtype=bool)
    for i, (table, pred) in enumerate(zip(tables, predictions)):
        if table.budget < int(alloc.max()):
            raise TableTooSmallError(
                f"table {i} covers budgets 0..{table.budget}, allocation needs {int(alloc.max())}"
            )
        yi = pred - 1
        rival_lower = table.lower[np.arange(table.n_classes), alloc].copy()
        rival_lower[yi] = np.inf
        flags[i] = table.upper[yi, alloc[yi]] >= rival_lower.min()
    return flags


def _search_worst_allocation(
    tables: Sequence[BoundTable], predictions: Sequence[int], n_classes: int, budget: int
) -> CollectiveResult:
    n = len(tables)
    lower = np.stack([t.lower for t in tables])          # (N, C, T+1)
    upper = np.stack([t.upper for t in tables])          # (N, C, T+1)
    preds0 = np.asarray(predictions, dtype=np.intp) - 1
    rows = np.arange(n)
    cols = np.arange(n_classes)

    b_max = -1
    best_alloc: tuple[int, ...] = (0,) * n_classes
    best_flags = np.zeros(n, dtype=bool)
    for alloc in enumerate_allocations(n_classes, budget):
        a = np.asarray(alloc, dtype=np.intp)
        rival = lower[:, cols, a[cols]].copy()           # (N, C)
        rival[rows, preds0] = np.inf
        broken = upper[rows, preds0, a[preds0]] >= rival.min(axis=1)
        b = int(broken.sum())
        if b > b_max:
            b_max, best_alloc, best_flags = b, alloc, broken
    return CollectiveResult(
        b_max=b_max,
        allocation=best_alloc,
        per_query_broken=tuple(bool(x) for x in best_flags),
        certified_ratio=(n - b_max) / n,
    )


def collective_certify(e: Episode, cfg: CertConfig) -> CollectiveResult:
    """Exhaustive worst-allocation certification of all queries at cfg.budget."""
    validate_episode(e)
    if not e.queries:
        raise InvalidParameterError("episode has no queries to certify")
    minfo = metric_info(cfg.metric, episode_max_norm(e))
    tables = []
    predictions = []
    for qi in range(len(e.queries)):
        bundle = build_score_bundle(e, qi, minfo)
        predictions.append(scores_from_bundle(bundle, cfg).predicted)
        tables.append(table_from_bundle(bundle, cfg))
    return _search_worst_allocation(tables, predictions, e.n_classes, cfg.budget)
