"""Support-set selection from the development split.

Two strategies:

* ``uniform-random`` draws k rows per class without replacement, each
  class from its own random sub-stream keyed by (seed, class index), so
  results do not depend on class iteration order or thread count.
* ``least-overlap`` sorts a class's candidates by (label-set size
  ascending, id ascending) and takes the first k; fully deterministic,
  seed-independent. Intended for multi-label data where support rows
  should carry as few extra classes as possible.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

from .embedstore import Dataset
from .errors import EmptyClassError
from .seeds import class_rng

STRATEGIES = ("uniform-random", "least-overlap")


@dataclass(frozen=True)
class SupportSpec:
    """Per-class support size, selection strategy, and master seed."""

    k: int
    strategy: str = "uniform-random"
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("support size k must be at least 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class SupportSets:
    """Per-class ordered row indices into the dataset they were drawn from."""

    per_class: dict[str, tuple[int, ...]]

    def ids(self, dataset: Dataset) -> dict[str, tuple[str, ...]]:
        """Record ids of the selected rows, per class."""
        recs = dataset.manifest.records
        return {
            c: tuple(recs[i].id for i in rows) for c, rows in self.per_class.items()
        }

    def digest(self, dataset: Dataset) -> str:
        """Stable hex digest of the selected record ids, per class."""
        h = hashlib.sha256()
        for c in sorted(self.per_class):
            ids = ",".join(dataset.manifest.records[i].id for i in self.per_class[c])
            h.update(f"{c}\t{ids}\n".encode("utf-8"))
        return h.hexdigest()

    def all_rows(self) -> set[int]:
        out: set[int] = set()
        for rows in self.per_class.values():
            out.update(rows)
        return out


def _dev_candidates(dataset: Dataset, cls: str) -> list[int]:
    return [
        i
        for i, rec in enumerate(dataset.manifest.records)
        if rec.split == "dev" and cls in rec.labels
    ]


def _check_shortfall(cls: str, available: int, k: int) -> None:
    if available == 0:
        raise EmptyClassError(f"class {cls!r} has no dev rows to sample from")
    if available < k:
        warnings.warn(
            f"class {cls!r}: only {available} dev rows available, requested {k}",
            stacklevel=3,
        )


def sample_uniform(dataset: Dataset, spec: SupportSpec) -> SupportSets:
    """Draw k dev rows per class uniformly without replacement.

    Shortfall (fewer than k candidates) takes all available rows and
    warns; a class with zero dev rows raises :class:`EmptyClassError`.
    """
    per_class: dict[str, tuple[int, ...]] = {}
    for ci, cls in enumerate(dataset.vocab.classes):
        cands = _dev_candidates(dataset, cls)
        _check_shortfall(cls, len(cands), spec.k)
        take = min(spec.k, len(cands))
        rng = class_rng(spec.seed, ci)
        chosen = rng.choice(len(cands), size=take, replace=False)
        per_class[cls] = tuple(cands[j] for j in chosen)
    return SupportSets(per_class)


def sample_least_overlap(dataset: Dataset, spec: SupportSpec) -> SupportSets:
    """Take the k dev rows per class with the fewest labels (id tie-break)."""
    recs = dataset.manifest.records
    per_class: dict[str, tuple[int, ...]] = {}
    for cls in dataset.vocab.classes:
        cands = _dev_candidates(dataset, cls)
        _check_shortfall(cls, len(cands), spec.k)
        ordered = sorted(cands, key=lambda i: (len(recs[i].labels), recs[i].id))
        per_class[cls] = tuple(ordered[: spec.k])
    return SupportSets(per_class)


def sample_support(dataset: Dataset, spec: SupportSpec) -> SupportSets:
    """Dispatch on the spec's strategy."""
    if spec.strategy == "uniform-random":
        return sample_uniform(dataset, spec)
    return sample_least_overlap(dataset, spec)


def save_support_sets(support: SupportSets, dataset: Dataset, path) -> None:
    """Persist selected record ids, one ``{"class", "ids"}`` object per line."""
    ids = support.ids(dataset)
    with open(path, "w", encoding="utf-8") as fh:
        for cls in sorted(ids):
            fh.write(json.dumps({"class": cls, "ids": list(ids[cls])}) + "\n")


def load_support_sets(path, dataset: Dataset) -> SupportSets:
    """Rebind a persisted support file to row indices of `dataset`."""
    by_id = {rec.id: i for i, rec in enumerate(dataset.manifest.records)}
    per_class: dict[str, tuple[int, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            obj = json.loads(line)
            per_class[obj["class"]] = tuple(by_id[i] for i in obj["ids"])
    return SupportSets(per_class)
