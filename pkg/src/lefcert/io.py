"""File formats: the embedding container, results JSON, and sweep CSV.

Embedding container layout (all integers little-endian):

    magic   4 bytes  b"LEFC"
    version u16      currently 1
    dim     u32      vector width d
    count   u64      number of records n
    flags   u16      bit 0 rows unit-norm, bit 1 noisy sample sets,
                     bit 2 denoised pipeline
    labels  n x (u16 length + UTF-8 bytes), empty length for unlabeled rows
    payload n*d float32, row-major

The reader rejects trailing bytes and, when the normalized flag is set,
re-checks every row's norm instead of renormalizing.  Writes go through a
temp file in the target directory plus an atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Embedding, Episode
from .errors import (
    BadMagicError,
    IoFailureError,
    LabelOutOfRangeError,
    NormViolationError,
    ShapeMismatchError,
    TrailingBytesError,
    TruncatedError,
    VersionUnsupportedError,
)
from .smoothing import NoisySampleSet, smoothed_embedding

MAGIC = b"LEFC"
VERSION = 1
FLAG_NORMALIZED = 1
FLAG_NOISY = 2
FLAG_DENOISED = 4

_HEADER = struct.Struct("<4sHIQH")
_LABEL_LEN = struct.Struct("<H")
_ROW_NORM_TOL = 1e-5


@dataclass(frozen=True)
class EmbeddingRecord:
    label: str
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise ShapeMismatchError("record payload must be a non-empty 1-D vector")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class EmbeddingFileData:
    records: tuple[EmbeddingRecord, ...]
    normalized: bool
    noisy: bool
    denoised: bool

    @property
    def dim(self) -> int:
        return self.records[0].values.shape[0] if self.records else 0


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lefc-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def write_embeddings(
    records: Iterable[EmbeddingRecord],
    path: str,
    normalized: bool = True,
    noisy: bool = False,
    denoised: bool = False,
) -> None:
    recs = tuple(records)
    if not recs:
        raise ShapeMismatchError("refusing to write a file with zero records")
    dim = recs[0].values.shape[0]
    for i, rec in enumerate(recs):
        if rec.values.shape[0] != dim:
            raise ShapeMismatchError(f"record {i} has dim {rec.values.shape[0]}, expected {dim}")
    if normalized:
        mat = np.stack([rec.values for rec in recs]).astype(np.float64)
        norms = np.linalg.norm(mat, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > _ROW_NORM_TOL:
            raise NormViolationError(f"row norms deviate from 1 by up to {worst:.3e}")
    flags = 0
    flags |= FLAG_NORMALIZED if normalized else 0
    flags |= FLAG_NOISY if noisy else 0
    flags |= FLAG_DENOISED if denoised else 0
    parts = [_HEADER.pack(MAGIC, VERSION, dim, len(recs), flags)]
    for rec in recs:
        raw = rec.label.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ShapeMismatchError(f"label longer than {0xFFFF} bytes")
        parts.append(_LABEL_LEN.pack(len(raw)))
        parts.append(raw)
    payload = np.stack([rec.values for rec in recs]).astype("<f4")
    parts.append(payload.tobytes(order="C"))
    _atomic_write(path, b"".join(parts))


def read_embeddings(path: str) -> EmbeddingFileData:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailureError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise TruncatedError(f"{path}: {len(blob)} bytes is shorter than the header")
    magic, version, dim, count, flags = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: got {magic!r}")
    if version != VERSION:
        raise VersionUnsupportedError(f"{path}: version {version}, supported {VERSION}")
    if dim == 0:
        raise ShapeMismatchError(f"{path}: dim is zero")
    offset = _HEADER.size
    labels = []
    for _ in range(count):
        if offset + _LABEL_LEN.size > len(blob):
            raise TruncatedError(f"{path}: label block ends early")
        (ln,) = _LABEL_LEN.unpack_from(blob, offset)
        offset += _LABEL_LEN.size
        if offset + ln > len(blob):
            raise TruncatedError(f"{path}: label bytes end early")
        try:
            labels.append(blob[offset : offset + ln].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise TruncatedError(f"{path}: label is not valid UTF-8") from exc
        offset += ln
    need = count * dim * 4
    have = len(blob) - offset
    if have < need:
        raise TruncatedError(f"{path}: payload has {have} bytes, needs {need}")
    if have > need:
        raise TrailingBytesError(f"{path}: {have - need} bytes after the payload")
    mat = np.frombuffer(blob, dtype="<f4", count=count * dim, offset=offset)
    mat = mat.reshape(count, dim) if count else mat.reshape(0, dim)
    normalized = bool(flags & FLAG_NORMALIZED)
    if normalized and count:
        norms = np.linalg.norm(mat.astype(np.float64), axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > _ROW_NORM_TOL:
            raise NormViolationError(f"{path}: row norms deviate from 1 by up to {worst:.3e}")
    records = tuple(
        EmbeddingRecord(label=labels[i], values=mat[i]) for i in range(count)
    )
    return EmbeddingFileData(
        records=records,
        normalized=normalized,
        noisy=bool(flags & FLAG_NOISY),
        denoised=bool(flags & FLAG_DENOISED),
    )


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        # JSON has no Infinity; null marks an unbounded value
        return None if not np.isfinite(f) else f
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_results(payload: dict, path: str) -> None:
    """Serialize a results payload as stable, human-readable JSON."""
    text = json.dumps(_json_safe(payload), indent=2, allow_nan=False) + "\n"
    _atomic_write(path, text.encode("utf-8"))


SWEEP_COLUMNS = (
    "protocol",
    "T",
    "M",
    "lambda",
    "metric",
    "clean_acc",
    "cert_acc",
    "runtime_s",
    "seed",
)


def write_sweep_csv(rows: Sequence[dict], path: str) -> None:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row[col]) for col in SWEEP_COLUMNS))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _embed(record: EmbeddingRecord, normalized: bool) -> Embedding:
    return Embedding(record.values.astype(np.float64), normalized=normalized)


def _collapse_noisy(data: EmbeddingFileData, n_noise: int, sigma: float):
    """Group a noisy file into per-input smoothed means, preserving order."""
    if n_noise < 1:
        raise ShapeMismatchError("noisy files need the threat model's n_noise to group rows")
    if len(data.records) % n_noise:
        raise ShapeMismatchError(
            f"{len(data.records)} rows do not divide into groups of {n_noise}"
        )
    out = []
    for start in range(0, len(data.records), n_noise):
        group = data.records[start : start + n_noise]
        names = {rec.label for rec in group}
        if len(names) > 1:
            raise ShapeMismatchError(f"group at row {start} mixes labels {sorted(names)}")
        mat = np.stack([rec.values for rec in group]).astype(np.float64)
        emb = smoothed_embedding(NoisySampleSet(mat, sigma=sigma, denoised=data.denoised))
        out.append((group[0].label, emb))
    return out


def _file_embeddings(data: EmbeddingFileData, n_noise: int | None, sigma: float):
    if data.noisy:
        return _collapse_noisy(data, n_noise or 0, sigma)
    return [(rec.label, _embed(rec, data.normalized)) for rec in data.records]


def load_episode(
    support_path: str,
    text_path: str,
    queries_path: str,
    n_noise: int | None = None,
    sigma: float = 1.0,
) -> Episode:
    """Assemble an episode from three embedding files.

    Class identity and order come from the support file's labels (first
    appearance wins).  Text rows are matched by label, or positionally when
    unlabeled.  Query labels are optional; unlabeled queries certify but
    carry no ground truth.
    """
    support = _file_embeddings(read_embeddings(support_path), n_noise, sigma)
    text = _file_embeddings(read_embeddings(text_path), n_noise, sigma)
    queries = _file_embeddings(read_embeddings(queries_path), n_noise, sigma)

    order: list[str] = []
    grouped: dict[str, list[Embedding]] = {}
    for label, emb in support:
        if not label:
            raise LabelOutOfRangeError("support rows must be labeled")
        if label not in grouped:
            order.append(label)
            grouped[label] = []
        grouped[label].append(emb)
    sizes = {len(v) for v in grouped.values()}
    if len(sizes) != 1:
        raise ShapeMismatchError(f"classes have unequal shot counts {sorted(sizes)}")

    text_labels = [label for label, _ in text]
    if any(text_labels):
        by_name = {label: emb for label, emb in text}
        missing = [name for name in order if name not in by_name]
        if missing:
            raise ShapeMismatchError(f"text file lacks anchors for {missing}")
        anchors = tuple(by_name[name] for name in order)
    else:
        if len(text) != len(order):
            raise ShapeMismatchError(
                f"{len(text)} unlabeled text rows for {len(order)} classes"
            )
        anchors = tuple(emb for _, emb in text)

    index = {name: i + 1 for i, name in enumerate(order)}
    query_pairs = []
    for label, emb in queries:
        if label:
            if label not in index:
                raise LabelOutOfRangeError(f"query label {label!r} is not a support class")
            query_pairs.append((emb, index[label]))
        else:
            query_pairs.append((emb, None))

    return Episode(
        support=tuple(tuple(grouped[name]) for name in order),
        text=anchors,
        queries=tuple(query_pairs),
        label_names=tuple(order),
    )


POOL_FEATURES = "features.lefc"
POOL_TEXT = "text.lefc"
EPISODE_SUPPORT = "support.lefc"
EPISODE_QUERIES = "queries.lefc"


def save_pool(pool, dirpath: str) -> None:
    """Write a pool as features.lefc + text.lefc inside dirpath.

    Classes are emitted in sorted label order so reruns are byte-identical.
    """
    feat_records = []
    text_records = []
    for name in sorted(pool.classes):
        for emb in pool.classes[name]:
            feat_records.append(EmbeddingRecord(name, emb.values.astype(np.float32)))
        text_records.append(EmbeddingRecord(name, pool.text[name].values.astype(np.float32)))
    write_embeddings(feat_records, os.path.join(dirpath, POOL_FEATURES), normalized=True)
    write_embeddings(text_records, os.path.join(dirpath, POOL_TEXT), normalized=True)


def load_pool(dirpath: str):
    """Read a pool directory written by save_pool (or shaped like one)."""
    from .harness import EmbeddingPool

    feats = read_embeddings(os.path.join(dirpath, POOL_FEATURES))
    text = read_embeddings(os.path.join(dirpath, POOL_TEXT))
    classes: dict[str, list[Embedding]] = {}
    for rec in feats.records:
        if not rec.label:
            raise LabelOutOfRangeError("pool feature rows must be labeled")
        classes.setdefault(rec.label, []).append(_embed(rec, feats.normalized))
    anchors: dict[str, Embedding] = {}
    for rec in text.records:
        if not rec.label:
            raise LabelOutOfRangeError("pool text rows must be labeled")
        anchors[rec.label] = _embed(rec, text.normalized)
    missing = [name for name in classes if name not in anchors]
    if missing:
        raise ShapeMismatchError(f"pool text file lacks anchors for {sorted(missing)}")
    return EmbeddingPool(
        classes={name: tuple(members) for name, members in classes.items()},
        text=anchors,
    )


def save_episode(episode: Episode, dirpath: str) -> None:
    """Write one episode as support.lefc + queries.lefc inside dirpath."""
    support_records = []
    for ci, shots in enumerate(episode.support):
        name = episode.label_names[ci]
        for emb in shots:
            support_records.append(EmbeddingRecord(name, emb.values.astype(np.float32)))
    query_records = []
    for emb, label in episode.queries:
        name = "" if label is None else episode.label_names[label - 1]
        query_records.append(EmbeddingRecord(name, emb.values.astype(np.float32)))
    write_embeddings(support_records, os.path.join(dirpath, EPISODE_SUPPORT), normalized=True)
    write_embeddings(query_records, os.path.join(dirpath, EPISODE_QUERIES), normalized=True)
