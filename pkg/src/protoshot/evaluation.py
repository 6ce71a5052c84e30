"""Evaluation harness: metrics, single runs, k-fold, repeated runs, sweeps.

Protocol
--------
A run samples a support set from the dev split, builds the configured
pipeline (prototype averaging, LDA, optionally preceded by MI feature
selection, or externally supplied zero-shot prototypes) and scores the
eval split. Single-label tasks report accuracy plus a confusion matrix;
multi-label tasks report mAP over per-class average precisions, using
negated distances (prototype methods) or discriminant values (LDA) as
ranking scores.

All randomness flows from the configured seed. Repeated runs use
per-run seeds ``derive_seed(master, run_index)``; sweeps use per-point
seeds ``derive_seed(master, point_index)`` as the master of that
point's repeated runs; k-fold uses ``derive_seed(seed, fold_index)``
per fold. Any unit can therefore be recomputed independently.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embedstore import ClassVocab, Dataset, subset
from .errors import ConfigError, DataError, MissingFoldError, UndefinedApError
from .featselect import apply_mask, default_bins, mi_scores, select_top
from .lda import lda_discriminant_matrix, lda_fit
from .prototypes import PrototypeSet, build_prototypes, score_matrix
from .sampler import SupportSets, SupportSpec, sample_support
from .seeds import derive_seed

METHODS = ("AVG", "LDA", "MI+AVG", "MI+LDA", "ZS-external")
TASKS = ("single-label", "multi-label")

_METHOD_ALIASES = {
    "avg": "AVG",
    "lda": "LDA",
    "mi+avg": "MI+AVG",
    "mi-avg": "MI+AVG",
    "mi+lda": "MI+LDA",
    "mi-lda": "MI+LDA",
    "zs-external": "ZS-external",
    "zs": "ZS-external",
}


def canonical_method(name: str) -> str:
    method = _METHOD_ALIASES.get(name.lower())
    if method is None:
        raise ConfigError(f"unknown method {name!r} (expected one of {METHODS})")
    return method


@dataclass(frozen=True)
class RunConfig:
    """Everything a single evaluation run depends on, minus the dataset."""

    method: str
    scheme: str = "uniform"
    metric: str = "cosine"
    k: int = 5
    ratio_k: float | None = None
    bins: int | None = None
    lam: float = 1e-4
    seed: int = 0
    task: str = "single-label"
    strategy: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        uses_mi = self.method.startswith("MI+")
        if uses_mi and self.ratio_k is None:
            raise ConfigError(f"method {self.method} requires the K ratio")
        if not uses_mi and self.ratio_k is not None:
            raise ConfigError("the K ratio applies only to MI methods")
        if not uses_mi and self.bins is not None:
            raise ConfigError("histogram bins apply only to MI methods")
        if self.method != "ZS-external" and self.k < 1:
            raise ConfigError("support size k must be at least 1")

    def effective_strategy(self) -> str:
        if self.strategy is not None:
            return self.strategy
        return "least-overlap" if self.task == "multi-label" else "uniform-random"

    def echo(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows: true class; columns: predicted class."""

    counts: np.ndarray  # (|C|, |C|) int64
    vocab: ClassVocab

    def __post_init__(self):
        arr = np.ascontiguousarray(self.counts, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total


@dataclass(frozen=True)
class EvalReport:
    """Outcome of one run: exactly one of accuracy/map is set."""

    task: str
    accuracy: float | None
    map: float | None
    per_class_ap: tuple[float, ...] | None
    skipped_classes: tuple[str, ...]
    confusion: ConfusionMatrix | None
    config: dict
    seed: int
    n_eval: int
    support_ids: dict[str, tuple[str, ...]] | None
    classes: tuple[str, ...] = ()

    @property
    def value(self) -> float:
        """The headline metric of the run (accuracy or mAP)."""
        return self.accuracy if self.task == "single-label" else self.map

    def to_dict(self) -> dict:
        aps = None
        if self.per_class_ap is not None:
            # NaN marks classes skipped for lack of positives; strict JSON
            # has no NaN literal, so emit null there
            aps = [None if np.isnan(a) else a for a in self.per_class_ap]
        return {
            "task": self.task,
            "accuracy": self.accuracy,
            "map": self.map,
            "classes": list(self.classes),
            "per_class_ap": aps,
            "skipped_classes": list(self.skipped_classes),
            "n_eval": self.n_eval,
            "seed": self.seed,
            "config": self.config,
            "support": {c: list(v) for c, v in self.support_ids.items()}
            if self.support_ids is not None
            else None,
            "confusion": self.confusion.counts.tolist() if self.confusion else None,
        }


def accuracy(preds, truths) -> float:
    """Fraction of exact matches."""
    preds = np.asarray(preds)
    truths = np.asarray(truths)
    if preds.shape != truths.shape:
        raise ValueError("prediction/truth length mismatch")
    if preds.size == 0:
        raise ValueError("cannot compute accuracy of zero items")
    return float(np.count_nonzero(preds == truths)) / preds.size


def confusion(preds, truths, vocab: ClassVocab) -> ConfusionMatrix:
    """Count matrix with rows indexed by truth and columns by prediction."""
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape:
        raise ValueError("prediction/truth length mismatch")
    if preds.size == 0:
        raise ValueError("cannot build a confusion matrix from zero items")
    n = len(vocab)
    for arr, what in ((preds, "prediction"), (truths, "truth")):
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError(f"{what} index outside the vocabulary range")
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (truths, preds), 1)
    return ConfusionMatrix(counts, vocab)


def average_precision(scores, relevance) -> float:
    """Non-interpolated AP of a ranking by descending score.

    Ties resolve by original index (stable sort), so the result is a
    pure function of the input order. Raises
    :class:`UndefinedApError` when nothing is relevant.
    """
    scores = np.asarray(scores, dtype=np.float64)
    relevance = np.asarray(relevance, dtype=bool)
    if scores.shape != relevance.shape:
        raise ValueError("score/relevance length mismatch")
    n_rel = int(relevance.sum())
    if n_rel == 0:
        raise UndefinedApError("no relevant items")
    order = np.argsort(-scores, kind="stable")
    rel_sorted = relevance[order]
    hits = np.cumsum(rel_sorted)
    ranks = np.arange(1, scores.size + 1)
    precisions = hits[rel_sorted] / ranks[rel_sorted]
    return float(precisions.sum() / n_rel)


@dataclass(frozen=True)
class MapResult:
    map: float
    per_class_ap: np.ndarray  # NaN where a class had no positives
    skipped: tuple[int, ...]  # class indices excluded from the mean


def map_score(score_matrix_: np.ndarray, label_matrix: np.ndarray) -> MapResult:
    """mAP over classes: AP of each class's item ranking by its score.

    Classes with zero positive items are excluded from the mean and
    reported via `skipped`; if every class is empty the mAP itself is
    undefined and :class:`UndefinedApError` is raised.
    """
    s = np.asarray(score_matrix_, dtype=np.float64)
    labels = np.asarray(label_matrix, dtype=bool)
    if s.shape != labels.shape:
        raise ValueError("score/label matrix shape mismatch")
    n_classes = s.shape[1]
    aps = np.full(n_classes, np.nan)
    skipped = []
    for c in range(n_classes):
        if not labels[:, c].any():
            skipped.append(c)
            continue
        aps[c] = average_precision(s[:, c], labels[:, c])
    if len(skipped) == n_classes:
        raise UndefinedApError("every class has zero positive items")
    valid = ~np.isnan(aps)
    return MapResult(float(aps[valid].mean()), aps, tuple(skipped))


def _support_pairs(
    pool: Dataset, support: SupportSets
) -> tuple[np.ndarray, np.ndarray]:
    """Training pairs (embedding, class index); multi-label rows may repeat."""
    xs, ys = [], []
    for ci, cls in enumerate(pool.vocab.classes):
        for row in support.per_class[cls]:
            xs.append(pool.matrix.data[row])
            ys.append(ci)
    return np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.int64)


def _check_task(dataset: Dataset, task: str) -> None:
    if task == "single-label" and not dataset.manifest.is_single_label:
        raise ConfigError("single-label task on a dataset with multi-label records")


def _evaluate(
    pool: Dataset,
    eval_ds: Dataset,
    config: RunConfig,
    external_protos: PrototypeSet | None,
) -> EvalReport:
    """Run the configured pipeline with `pool` as the support source."""
    vocab = pool.vocab
    if eval_ds.n == 0:
        raise DataError("no evaluation rows")

    support = None
    if config.method == "ZS-external":
        if external_protos is None:
            raise ConfigError("ZS-external requires a prototype set")
        if external_protos.vocab.classes != vocab.classes:
            raise ConfigError("prototype vocabulary does not match the dataset")
    else:
        spec = SupportSpec(
            k=config.k, strategy=config.effective_strategy(), seed=config.seed
        )
        support = sample_support(pool, spec)

    queries = eval_ds.matrix.data
    pool_used = pool
    mask = None
    if config.method.startswith("MI+"):
        X_sup, y_sup = _support_pairs(pool, support)
        bins = config.bins
        if bins is None:
            bins = default_bins(min(len(v) for v in support.per_class.values()))
        scores = mi_scores(X_sup, y_sup, bins)
        mask = select_top(scores, len(vocab), config.ratio_k)
        pool_used = apply_mask(pool, mask)
        queries = queries[:, mask.indices]

    if config.method in ("AVG", "MI+AVG"):
        protos = build_prototypes(pool_used, support, config.scheme)
        dists = score_matrix(protos, queries, config.metric)
        preds = np.argmin(dists, axis=1)
        rank_scores = -dists
    elif config.method in ("LDA", "MI+LDA"):
        X_sup, y_sup = _support_pairs(pool_used, support)
        model = lda_fit(X_sup, y_sup, lam=config.lam)
        disc = lda_discriminant_matrix(model, queries)
        preds = np.argmax(disc, axis=1)
        rank_scores = disc
    else:  # ZS-external
        dists = score_matrix(external_protos, queries, config.metric)
        preds = np.argmin(dists, axis=1)
        rank_scores = -dists

    support_ids = support.ids(pool) if support is not None else None
    if config.task == "single-label":
        truths = np.array(
            [vocab.index[next(iter(r.labels))] for r in eval_ds.manifest.records]
        )
        cm = confusion(preds, truths, vocab)
        return EvalReport(
            task=config.task,
            accuracy=accuracy(preds, truths),
            map=None,
            per_class_ap=None,
            skipped_classes=(),
            confusion=cm,
            config=config.echo(),
            seed=config.seed,
            n_eval=eval_ds.n,
            support_ids=support_ids,
            classes=vocab.classes,
        )
    label_matrix = np.zeros((eval_ds.n, len(vocab)), dtype=bool)
    for i, rec in enumerate(eval_ds.manifest.records):
        for cls in rec.labels:
            label_matrix[i, vocab.index[cls]] = True
    result = map_score(rank_scores, label_matrix)
    return EvalReport(
        task=config.task,
        accuracy=None,
        map=result.map,
        per_class_ap=tuple(float(a) for a in result.per_class_ap),
        skipped_classes=tuple(vocab.classes[c] for c in result.skipped),
        confusion=None,
        config=config.echo(),
        seed=config.seed,
        n_eval=eval_ds.n,
        support_ids=support_ids,
        classes=vocab.classes,
    )


def run_once(
    dataset: Dataset,
    config: RunConfig,
    external_protos: PrototypeSet | None = None,
) -> EvalReport:
    """Sample support from the dev split, evaluate on the eval split."""
    _check_task(dataset, config.task)
    eval_ds = subset(dataset, split="eval")
    return _evaluate(dataset, eval_ds, config, external_protos)


@dataclass(frozen=True)
class KfoldResult:
    folds: tuple[int, ...]
    reports: tuple[EvalReport, ...]
    pooled_mean: float


def kfold_run(
    dataset: Dataset,
    config: RunConfig,
    external_protos: PrototypeSet | None = None,
) -> KfoldResult:
    """One run per fold: support from the other folds, evaluation on the fold.

    The pooled mean is the arithmetic mean of the per-fold headline
    metrics. Fold f's run uses seed ``derive_seed(config.seed, f_index)``.
    """
    _check_task(dataset, config.task)
    records = dataset.manifest.records
    if len(records) == 0 or any(r.fold is None for r in records):
        raise MissingFoldError("every record needs a fold for k-fold evaluation")
    folds = sorted({r.fold for r in records})
    reports = []
    for fi, fold in enumerate(folds):
        pool_rows = [i for i, r in enumerate(records) if r.fold != fold]
        pool = subset(dataset, indices=pool_rows)
        eval_ds = subset(dataset, fold=fold)
        cfg = dataclasses.replace(config, seed=derive_seed(config.seed, fi))
        reports.append(_evaluate(pool, eval_ds, cfg, external_protos))
    pooled = sum(r.value for r in reports) / len(reports)
    return KfoldResult(tuple(folds), tuple(reports), pooled)


@dataclass(frozen=True)
class SweepPoint:
    """Repeated-run statistics at one parameter value."""

    value: float | int | None
    mean: float
    std: float | None  # sample std (ddof=1); None when R == 1
    runs: tuple[float, ...]
    seeds: tuple[int, ...]
    reports: tuple[EvalReport, ...]


@dataclass(frozen=True)
class SweepResult:
    axis: str  # "support_size" | "K" | "point"
    points: tuple[SweepPoint, ...]
    r: int
    master_seed: int


def repeated_runs(
    dataset: Dataset,
    config: RunConfig,
    r: int,
    master_seed: int,
    external_protos: PrototypeSet | None = None,
    workers: int = 1,
) -> SweepPoint:
    """Execute R runs with seeds derive_seed(master, i); mean and sample std."""
    if r < 1:
        raise ValueError("R must be at least 1")
    seeds = tuple(derive_seed(master_seed, i) for i in range(r))
    reports: list[EvalReport | None] = [None] * r

    def one(i: int) -> None:
        cfg = dataclasses.replace(config, seed=seeds[i])
        reports[i] = run_once(dataset, cfg, external_protos)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one, range(r)))
    else:
        for i in range(r):
            one(i)
    values = tuple(rep.value for rep in reports)
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if r >= 2 else None
    return SweepPoint(
        value=None, mean=mean, std=std, runs=values, seeds=seeds,
        reports=tuple(reports),
    )


def sweep(
    dataset: Dataset,
    config: RunConfig,
    axis: str,
    values,
    r: int,
    master_seed: int,
    external_protos: PrototypeSet | None = None,
    workers: int = 1,
) -> SweepResult:
    """Repeated runs per axis value; axis is "support_size" or "K".

    Point p uses master seed ``derive_seed(master_seed, p)``, so each
    point reproduces independently via :func:`repeated_runs`.
    """
    if axis not in ("support_size", "K"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    points = []
    for p, value in enumerate(values):
        if axis == "support_size":
            cfg = dataclasses.replace(config, k=int(value))
        else:
            cfg = dataclasses.replace(config, ratio_k=float(value))
        point = repeated_runs(
            dataset, cfg, r, derive_seed(master_seed, p), external_protos, workers
        )
        points.append(dataclasses.replace(point, value=value))
    return SweepResult(axis=axis, points=tuple(points), r=r, master_seed=master_seed)
