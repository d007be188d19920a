"""Shared constructors for test episodes and score bundles."""

import numpy as np

from lefcert import Embedding, Episode, ScoreBundle


def unit(values) -> Embedding:
    arr = np.asarray(values, dtype=np.float64)
    return Embedding(arr / np.linalg.norm(arr))


def basis_episode(n_classes=3, n_shots=4, dim=16, jitter=0.0, seed=0) -> Episode:
    """Episode built around orthogonal class anchors; jitter perturbs the shots."""
    rng = np.random.Generator(np.random.PCG64(seed))
    anchors = np.eye(dim)[:n_classes]
    support = []
    for ci in range(n_classes):
        shots = []
        for _ in range(n_shots):
            v = anchors[ci] + jitter * rng.normal(size=dim)
            shots.append(unit(v))
        support.append(tuple(shots))
    text = tuple(unit(anchors[ci] + 0.05) for ci in range(n_classes))
    queries = tuple((unit(anchors[ci] + 0.02), ci + 1) for ci in range(n_classes))
    names = tuple(f"c{ci}" for ci in range(n_classes))
    return Episode(support=tuple(support), text=text, queries=queries, label_names=names)


def bundle_from_rows(p_rows, q_rows, d_text, range_max=2.0) -> ScoreBundle:
    p_raw = np.asarray(p_rows, dtype=np.float64)
    q_raw = np.asarray(q_rows, dtype=np.float64)
    return ScoreBundle(
        p=np.sort(p_raw, axis=1),
        q=np.sort(q_raw, axis=1),
        d_text=np.asarray(d_text, dtype=np.float64),
        range_max=range_max,
        p_raw=p_raw,
        q_raw=q_raw,
    )
