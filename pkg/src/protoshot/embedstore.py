"""Embedding storage: binary matrix files, manifests, and datasets.

File formats
------------
EMB1 (binary, bit-exact):
    bytes 0-3    magic ``EMB1`` (ASCII)
    bytes 4-7    u32 little-endian version, must be 1
    bytes 8-11   u32 little-endian row count ``n``
    bytes 12-15  u32 little-endian embedding dimension ``l``
    then         ``n * l`` IEEE-754 binary32 little-endian values, row-major

Manifest (UTF-8 text):
    One JSON object per line with keys ``id`` (string), ``labels``
    (non-empty array of strings), ``split`` (``"dev"`` or ``"eval"``)
    and optional ``fold`` (non-negative integer). Blank lines and lines
    starting with ``#`` are ignored.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BindError, DataError, FormatError, ManifestError, TruncationError

_MAGIC = b"EMB1"
_VERSION = 1
_HEADER = struct.Struct("<4sIII")

SPLITS = ("dev", "eval")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """An n-by-l matrix of finite float32 embedding vectors, row-major."""

    data: np.ndarray  # shape (n, l), dtype float32

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got {arr.ndim}-D")
        if arr.shape[1] < 1:
            raise DataError("embedding dimension must be at least 1")
        if not np.isfinite(arr).all():
            raise DataError("embedding matrix contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def l(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    labels: frozenset[str]
    split: str
    fold: int | None = None


@dataclass(frozen=True)
class Manifest:
    """Ordered record list; ids are unique, label sets non-empty."""

    records: tuple[ManifestRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def is_single_label(self) -> bool:
        return all(len(r.labels) == 1 for r in self.records)

    @property
    def has_folds(self) -> bool:
        return len(self.records) > 0 and all(r.fold is not None for r in self.records)

    def label_union(self) -> set[str]:
        out: set[str] = set()
        for r in self.records:
            out |= r.labels
        return out


@dataclass(frozen=True)
class ClassVocab:
    """Lexicographically sorted, duplicate-free class list with index lookup."""

    classes: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if list(self.classes) != sorted(set(self.classes)):
            raise DataError("class vocabulary must be sorted and duplicate-free")
        object.__setattr__(self, "index", {c: i for i, c in enumerate(self.classes)})

    def __len__(self) -> int:
        return len(self.classes)

    @staticmethod
    def from_labels(labels) -> "ClassVocab":
        return ClassVocab(tuple(sorted(set(labels))))


@dataclass(frozen=True)
class Dataset:
    """Embedding matrix bound to a manifest and class vocabulary.

    Immutable after construction; :func:`subset` produces new datasets
    that preserve original row order and the original vocabulary, so
    class indices stay stable even when a subset lacks some class.
    """

    matrix: EmbeddingMatrix
    manifest: Manifest
    vocab: ClassVocab

    def __post_init__(self):
        if self.matrix.n != len(self.manifest):
            raise BindError(
                f"matrix has {self.matrix.n} rows but manifest has "
                f"{len(self.manifest)} records"
            )

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def dim(self) -> int:
        return self.matrix.l

    def label_indices(self, row: int) -> tuple[int, ...]:
        """Vocab indices of the labels on one record, ascending."""
        rec = self.manifest.records[row]
        return tuple(sorted(self.vocab.index[c] for c in rec.labels))


def read_embeddings(path) -> EmbeddingMatrix:
    """Read an EMB1 file. Values are bit-identical to the payload."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise TruncationError(f"{path}: file shorter than the 16-byte header")
    magic, version, n, l = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if l < 1:
        raise FormatError(f"{path}: embedding dimension must be at least 1, got {l}")
    expected = n * l * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise TruncationError(
            f"{path}: payload is {len(payload)} bytes, header declares {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(n, l)
    if not np.isfinite(values).all():
        raise DataError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(values.astype(np.float32, copy=True))


def write_embeddings(matrix: EmbeddingMatrix, path) -> None:
    """Write an EMB1 file readable by :func:`read_embeddings`."""
    header = _HEADER.pack(_MAGIC, _VERSION, matrix.n, matrix.l)
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _parse_record(obj, line: int) -> ManifestRecord:
    if not isinstance(obj, dict):
        raise ManifestError(line, "record must be a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise ManifestError(line, "missing or invalid 'id'")
    labels = obj.get("labels")
    if not isinstance(labels, list) or not labels:
        raise ManifestError(line, "'labels' must be a non-empty array")
    if not all(isinstance(c, str) and c for c in labels):
        raise ManifestError(line, "'labels' must contain non-empty strings")
    split = obj.get("split")
    if split not in SPLITS:
        raise ManifestError(line, f"unknown split {split!r} (expected 'dev' or 'eval')")
    fold = obj.get("fold")
    if fold is not None:
        if not isinstance(fold, int) or isinstance(fold, bool) or fold < 0:
            raise ManifestError(line, "'fold' must be a non-negative integer")
    return ManifestRecord(id=rid, labels=frozenset(labels), split=split, fold=fold)


def read_manifest(path) -> Manifest:
    """Read a line-delimited manifest; errors carry the offending line number."""
    records: list[ManifestRecord] = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ManifestError(lineno, f"invalid JSON: {exc.msg}") from exc
            rec = _parse_record(obj, lineno)
            if rec.id in seen:
                raise ManifestError(
                    lineno, f"duplicate id {rec.id!r} (first seen on line {seen[rec.id]})"
                )
            seen[rec.id] = lineno
            records.append(rec)
    return Manifest(tuple(records))


def write_manifest(manifest: Manifest, path, header_comment: str | None = None) -> None:
    """Write manifest records as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        for rec in manifest.records:
            obj = {"id": rec.id, "labels": sorted(rec.labels), "split": rec.split}
            if rec.fold is not None:
                obj["fold"] = rec.fold
            fh.write(json.dumps(obj, sort_keys=False) + "\n")


def bind(matrix: EmbeddingMatrix, manifest: Manifest) -> Dataset:
    """Join matrix and manifest; vocab is the sorted union of manifest labels."""
    if matrix.n != len(manifest):
        raise BindError(
            f"matrix has {matrix.n} rows but manifest has {len(manifest)} records"
        )
    return Dataset(matrix, manifest, ClassVocab.from_labels(manifest.label_union()))


def subset(
    dataset: Dataset,
    split: str | None = None,
    fold: int | None = None,
    indices=None,
) -> Dataset:
    """Filter rows by split and/or fold and/or an explicit index list.

    Conditions combine with AND. Surviving rows keep their original
    relative order; the returned dataset retains the parent vocabulary.
    Explicit indices are treated as a set (duplicates collapse) and must
    be in range.
    """
    if split is not None and split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    keep = np.ones(dataset.n, dtype=bool)
    if indices is not None:
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= dataset.n):
            raise IndexError("subset index out of range")
        mask = np.zeros(dataset.n, dtype=bool)
        mask[idx] = True
        keep &= mask
    if split is not None:
        keep &= np.array(
            [r.split == split for r in dataset.manifest.records], dtype=bool
        )
    if fold is not None:
        keep &= np.array(
            [r.fold == fold for r in dataset.manifest.records], dtype=bool
        )
    rows = np.flatnonzero(keep)
    new_matrix = EmbeddingMatrix(dataset.matrix.data[rows])
    new_manifest = Manifest(tuple(dataset.manifest.records[i] for i in rows))
    return Dataset(new_matrix, new_manifest, dataset.vocab)
