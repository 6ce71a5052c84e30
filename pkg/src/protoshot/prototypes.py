"""Class prototypes and minimum-distance classification.

A prototype is one reference vector per class. Prototypes are either
weighted averages of support embeddings (``uniform`` weights 1/k, or
``norm-weighted`` weights 1/(k * ||e_i||_2), i.e. an average of
normalized embeddings) or loaded from an external file (zero-shot mode,
where the vectors come from a text encoder or any other source).

Classification assigns a query embedding to the class whose prototype
minimizes a distance: cosine distance 1 - a.b/(||a|| ||b||), or MSE
distance mean((a_i - b_i)^2). Ties break toward the lowest class index.
For ranking (mAP) the negated distances serve as scores.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .embedstore import (
    ClassVocab,
    Dataset,
    EmbeddingMatrix,
    read_embeddings,
    write_embeddings,
)
from .errors import DegenerateEmbeddingError, EmptyClassError, FormatError
from .sampler import SupportSets


class WeightScheme(str, enum.Enum):
    UNIFORM = "uniform"
    NORM = "norm-weighted"


class Metric(str, enum.Enum):
    COSINE = "cosine"
    MSE = "mse"


@dataclass(frozen=True)
class Provenance:
    """How a prototype set came to be: averaged from a support digest, or external."""

    kind: str  # "averaged" | "external"
    scheme: str | None = None
    support_digest: str | None = None


@dataclass(frozen=True)
class PrototypeSet:
    """One float32 vector per vocabulary class, in vocab order."""

    vectors: np.ndarray  # (|C|, L) float32
    vocab: ClassVocab
    provenance: Provenance

    def __post_init__(self):
        arr = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] != len(self.vocab):
            raise FormatError(
                f"prototype matrix must be |C| x L with |C|={len(self.vocab)}"
            )
        if not np.isfinite(arr).all():
            raise FormatError("prototype matrix contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def build_prototypes(
    dataset: Dataset, support: SupportSets, scheme: WeightScheme | str
) -> PrototypeSet:
    """Average each class's support embeddings into its prototype.

    Accumulates in float64 and stores float32, matching the on-disk
    precision so save/load round-trips reproduce predictions exactly.
    """
    scheme = WeightScheme(scheme)
    data = dataset.matrix.data
    out = np.empty((len(dataset.vocab), dataset.dim), dtype=np.float64)
    for ci, cls in enumerate(dataset.vocab.classes):
        rows = support.per_class.get(cls, ())
        if not rows:
            raise EmptyClassError(f"no support rows for class {cls!r}")
        members = data[np.asarray(rows, dtype=np.int64)].astype(np.float64)
        if scheme is WeightScheme.UNIFORM:
            weights = np.full(len(rows), 1.0 / len(rows))
        else:
            norms = np.linalg.norm(members, axis=1)
            if np.any(norms == 0.0):
                bad = dataset.manifest.records[rows[int(np.argmin(norms))]].id
                raise DegenerateEmbeddingError(
                    f"zero-norm support embedding {bad!r} under norm-weighted scheme"
                )
            weights = 1.0 / (len(rows) * norms)
        out[ci] = weights @ members
    prov = Provenance(
        kind="averaged", scheme=scheme.value, support_digest=support.digest(dataset)
    )
    return PrototypeSet(out.astype(np.float32), dataset.vocab, prov)


def save_prototypes(protos: PrototypeSet, path) -> None:
    """Write an EMB1 file plus a ``<path>.classes`` sidecar with class order."""
    write_embeddings(EmbeddingMatrix(protos.vectors), path)
    with open(f"{path}.classes", "w", encoding="utf-8") as fh:
        for cls in protos.vocab.classes:
            fh.write(cls + "\n")


def load_prototypes(path, vocab: ClassVocab) -> PrototypeSet:
    """Load external prototypes, reordering file rows to vocab order.

    The sidecar ``<path>.classes`` names the class of each file row.
    Class set mismatches against `vocab` raise :class:`FormatError`.
    """
    matrix = read_embeddings(path)
    with open(f"{path}.classes", "r", encoding="utf-8") as fh:
        file_classes = [line.strip() for line in fh if line.strip()]
    if len(file_classes) != matrix.n:
        raise FormatError(
            f"sidecar lists {len(file_classes)} classes but file has {matrix.n} rows"
        )
    if matrix.n != len(vocab):
        raise FormatError(
            f"prototype file has {matrix.n} rows, vocabulary has {len(vocab)} classes"
        )
    if sorted(file_classes) != list(vocab.classes):
        raise FormatError("sidecar class set does not match the vocabulary")
    order = np.array([file_classes.index(c) for c in vocab.classes])
    return PrototypeSet(matrix.data[order], vocab, Provenance(kind="external"))


def _check_norms(norms: np.ndarray, what: str) -> None:
    if np.any(norms == 0.0):
        raise DegenerateEmbeddingError(f"zero-norm {what} under cosine metric")


def score_matrix(
    protos: PrototypeSet, queries: np.ndarray, metric: Metric | str
) -> np.ndarray:
    """Distances from each query row to each prototype, shape (n, |C|).

    Lower is better. Computed in float64. Cosine distances are clamped
    into [0, 2] so rounding noise cannot violate the metric's range;
    MSE uses the definitional form, which keeps d(x, x) = 0 exact.
    """
    metric = Metric(metric)
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if q.shape[1] != protos.dim:
        raise ValueError(
            f"query dimension {q.shape[1]} does not match prototypes ({protos.dim})"
        )
    p = protos.vectors.astype(np.float64)
    if metric is Metric.COSINE:
        qn = np.linalg.norm(q, axis=1)
        pn = np.linalg.norm(p, axis=1)
        _check_norms(qn, "query embedding")
        _check_norms(pn, "prototype")
        return np.clip(1.0 - (q @ p.T) / np.outer(qn, pn), 0.0, 2.0)
    out = np.empty((q.shape[0], p.shape[0]), dtype=np.float64)
    # block over queries: the (block, |C|, L) intermediate stays small
    block = max(1, 2_000_000 // max(1, p.shape[0] * p.shape[1]))
    for start in range(0, q.shape[0], block):
        diff = q[start : start + block, None, :] - p[None, :, :]
        out[start : start + block] = np.mean(diff * diff, axis=2)
    return out


def score(protos: PrototypeSet, e: np.ndarray, metric: Metric | str) -> np.ndarray:
    """Per-class distance vector for one query embedding."""
    return score_matrix(protos, np.asarray(e)[None, :], metric)[0]


def classify(protos: PrototypeSet, e: np.ndarray, metric: Metric | str) -> int:
    """Index of the nearest prototype; ties break to the lowest class index."""
    return int(np.argmin(score(protos, e, metric)))


def classify_matrix(
    protos: PrototypeSet, queries: np.ndarray, metric: Metric | str
) -> np.ndarray:
    """Vectorized :func:`classify` over query rows."""
    return np.argmin(score_matrix(protos, queries, metric), axis=1)
