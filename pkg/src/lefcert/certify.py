"""Per-sample certification against a total poisoning budget.

A prediction y is certified at budget T when for every split of the budget
between the predicted class and any rival c != y the attacked scores cannot
cross:

    upper[y][t] < lower[c][T - t]   for all t in 0..T and all c != y.

The comparison is strict; a tie leaves the sample uncertified.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds import BoundTable, table_from_bundle
from .core import CertConfig, Episode, validate_episode
from .distance import metric_info
from .errors import TableTooSmallError
from .scoring import ClassScores, build_score_bundle, episode_max_norm, scores_from_bundle

__all__ = ["Certificate", "certify_sample", "certify_episode"]


@dataclass(frozen=True)
class Certificate:
    """Outcome for one query.  ``failing_split`` is the first (t_pred, class)
    witness when certification fails, None otherwise."""

    predicted: int
    certified: bool
    failing_split: tuple[int, int] | None
    bound_table: BoundTable


def certify_sample(scores: ClassScores, table: BoundTable, budget: int) -> Certificate:
    """Check the pairwise bound condition for every budget split."""
    if table.budget < budget:
        raise TableTooSmallError(
            f"table covers budgets 0..{table.budget}, requested {budget}"
        )
    y = scores.predicted
    yi = y - 1
    n = table.n_classes
    for t_pred in range(budget + 1):
        rem = budget - t_pred
        up = table.upper[yi, t_pred]
        for c in range(1, n + 1):
            if c == y:
                continue
            if not (up < table.lower[c - 1, rem]):
                return Certificate(
                    predicted=y, certified=False, failing_split=(t_pred, c), bound_table=table
                )
    return Certificate(predicted=y, certified=True, failing_split=None, bound_table=table)


def certify_episode(e: Episode, cfg: CertConfig) -> list[tuple[Certificate, bool | None]]:
    """Certify every query of an episode at cfg.budget.

    Returns one (certificate, correct) pair per query; ``correct`` is None for
    queries without a true label.
    """
    validate_episode(e)
    minfo = metric_info(cfg.metric, episode_max_norm(e))
    out: list[tuple[Certificate, bool | None]] = []
    for qi, (_, true_label) in enumerate(e.queries):
        bundle = build_score_bundle(e, qi, minfo)
        scores = scores_from_bundle(bundle, cfg)
        table = table_from_bundle(bundle, cfg)
        cert = certify_sample(scores, table, cfg.budget)
        correct = None if true_label is None else (cert.predicted == true_label)
        out.append((cert, correct))
    return out
