"""Mutual-information feature scoring and top-m selection.

Each feature is discretized into equal-frequency (quantile) bins and
scored by its plugin mutual information with the class label,

    I = sum_{b,c} p(b,c) * ln(p(b,c) / (p(b) * p(c)))    [nats],

computed over the joint (bin, class) histogram of the support rows.
Binning is rank-based: a value's bin is determined by the rank of its
first occurrence in sorted order, so identical values always share a
bin and any strictly monotone transform of a feature leaves the scores
unchanged. Selection keeps the m = min(L, round_half_up(|C| * K))
highest-scoring features, ties broken toward the lower index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedstore import Dataset, EmbeddingMatrix
from .errors import NotEnoughClassesError
from .prototypes import PrototypeSet


@dataclass(frozen=True)
class MiScores:
    """Per-feature MI with the label, in nats, plus the bin count used."""

    scores: np.ndarray  # (L,) float64, finite, >= 0
    bins: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.scores, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)


@dataclass(frozen=True)
class FeatureMask:
    """Strictly increasing feature indices to keep."""

    indices: np.ndarray  # (m,) int64

    def __post_init__(self):
        arr = np.ascontiguousarray(self.indices, dtype=np.int64)
        if arr.size < 1:
            raise ValueError("feature mask must keep at least one feature")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("feature mask indices must be strictly increasing")
        arr.setflags(write=False)
        object.__setattr__(self, "indices", arr)

    @property
    def m(self) -> int:
        return int(self.indices.size)


def quantile_bin_assign(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin index per value, rank-based.

    bin(v) = floor(first_rank(v) * bins / n), where first_rank is the
    position of v's first occurrence in sorted order; ties therefore
    share a bin and edges fall only between distinct values.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    sorted_v = np.sort(v, kind="stable")
    first_rank = np.searchsorted(sorted_v, v, side="left")
    return (first_rank * bins) // n


def mi_feature(values: np.ndarray, y: np.ndarray, n_classes: int, bins: int) -> float:
    """Plugin MI of one discretized feature against the class label."""
    assignments = quantile_bin_assign(values, bins)
    occupied = np.unique(assignments)
    if occupied.size <= 1:
        return 0.0
    joint = np.zeros((bins, n_classes), dtype=np.float64)
    np.add.at(joint, (assignments, y), 1.0)
    joint /= values.size
    pb = joint.sum(axis=1)
    pc = joint.sum(axis=0)
    nz = joint > 0
    denom = np.outer(pb, pc)
    total = float(np.sum(joint[nz] * np.log(joint[nz] / denom[nz])))
    return max(0.0, total)


def default_bins(rows_per_class: int) -> int:
    """min(8, floor(sqrt(rows per class))), clamped to at least 2."""
    return max(2, min(8, int(math.isqrt(max(0, rows_per_class)))))


def mi_scores(X: np.ndarray, y: np.ndarray, bins: int) -> MiScores:
    """Per-feature MI between the (support) rows and their class labels.

    `y` holds class indices; at least two distinct classes and one row
    per class are required.
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValueError("row/label count mismatch")
    classes = np.unique(y)
    if classes.size < 2:
        raise NotEnoughClassesError("mutual information requires at least 2 classes")
    n_classes = int(y.max()) + 1
    scores = np.array(
        [mi_feature(X[:, j], y, n_classes, bins) for j in range(X.shape[1])]
    )
    return MiScores(scores, bins)


def support_mi_scores(dataset: Dataset, support, bins: int | None = None) -> MiScores:
    """MI over a dataset's sampled support rows only.

    Builds (embedding, class index) pairs from the support sets; a
    multi-label row selected for several classes contributes once per
    class. `bins=None` derives the default from the smallest per-class
    support size.
    """
    xs, ys = [], []
    for ci, cls in enumerate(dataset.vocab.classes):
        for row in support.per_class[cls]:
            xs.append(dataset.matrix.data[row])
            ys.append(ci)
    if bins is None:
        bins = default_bins(min(len(v) for v in support.per_class.values()))
    return mi_scores(
        np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.int64), bins
    )


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def select_top(scores: MiScores, vocab_size: int, ratio: float) -> FeatureMask:
    """Keep the min(L, round_half_up(|C| * K)) highest-MI features.

    Equal scores resolve toward the lower feature index; the returned
    mask indices are strictly increasing.
    """
    if ratio <= 0:
        raise ValueError("K ratio must be positive")
    n_features = scores.scores.size
    m = min(n_features, round_half_up(vocab_size * ratio))
    # stable sort on negated scores: equal scores keep index order
    order = np.argsort(-scores.scores, kind="stable")
    keep = np.sort(order[:m])
    return FeatureMask(keep)


def apply_mask(obj, mask: FeatureMask):
    """Restrict columns to the mask indices, preserving their order.

    Accepts a plain array, an :class:`EmbeddingMatrix`, a
    :class:`Dataset`, or a :class:`PrototypeSet` and returns the same
    kind with reduced dimension.
    """
    idx = mask.indices
    if isinstance(obj, Dataset):
        if int(idx[-1]) >= obj.dim:
            raise ValueError("mask index out of range for dataset dimension")
        return Dataset(
            EmbeddingMatrix(obj.matrix.data[:, idx]), obj.manifest, obj.vocab
        )
    if isinstance(obj, EmbeddingMatrix):
        if int(idx[-1]) >= obj.l:
            raise ValueError("mask index out of range for matrix dimension")
        return EmbeddingMatrix(obj.data[:, idx])
    if isinstance(obj, PrototypeSet):
        if int(idx[-1]) >= obj.dim:
            raise ValueError("mask index out of range for prototype dimension")
        return PrototypeSet(obj.vectors[:, idx], obj.vocab, obj.provenance)
    arr = np.asarray(obj)
    if int(idx[-1]) >= arr.shape[1]:
        raise ValueError("mask index out of range for array dimension")
    return arr[:, idx]


def save_mask(mask: FeatureMask, path, bins: int, ratio: float) -> None:
    """One header line with bins and K, then the comma-separated indices."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# bins={bins} K={ratio!r}\n")
        fh.write(",".join(str(int(i)) for i in mask.indices) + "\n")


def load_mask(path) -> tuple[FeatureMask, int, float]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        body = fh.readline().strip()
    if not header.startswith("#"):
        raise ValueError("mask file must start with a '# bins=... K=...' header")
    fields = dict(part.split("=", 1) for part in header.lstrip("# ").split())
    indices = np.array([int(t) for t in body.split(",")], dtype=np.int64)
    return FeatureMask(indices), int(fields["bins"]), float(fields["K"])
