"""Figure rendering for sweep reports."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import SweepRecord


def render_sweep_figure(records: Sequence[SweepRecord], path: str, dpi: int = 150) -> str:
    """Certified accuracy against budget, one line per (protocol, M, lambda) cell."""
    groups: dict[tuple, list[SweepRecord]] = {}
    for rec in records:
        groups.setdefault((rec.protocol, rec.M, rec.lam), []).append(rec)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for (protocol, m, lam), recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda r: r.T)
        xs = [r.T for r in recs]
        ys = [r.cert_acc for r in recs]
        label = f"{protocol} M={m} lam={lam:g}"
        ax.plot(xs, ys, marker="o", markersize=3.5, linewidth=1.2, label=label)
    ax.set_xlabel("poisoning budget T")
    ax.set_ylabel("certified accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
