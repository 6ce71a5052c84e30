"""Synthetic Gaussian embedding datasets with known structure.

Rows for class c are drawn as ``mean_c + N(0, sigma^2 I)``; the class
means themselves are drawn once from ``N(0, mean_scale^2)`` on the
informative dimensions and are zero on the trailing `noise_dims`
dimensions, which therefore carry no label information. An optional
per-row multiplicative gain, drawn log-uniformly from `gain_jitter`,
rescales a row without changing its direction.

The generator is a pure function of the spec: draws happen in a fixed
order (means, then row noise, then gains last), so two specs differing
only in `gain_jitter` share identical base rows, and the same spec
always produces byte-identical datasets.

Because the generating distribution is known, :func:`bayes_accuracy`
gives a Monte-Carlo estimate of the best achievable accuracy (nearest
class mean under the true means, which is Bayes-optimal for these
isotropic equal-prior mixtures), serving as a calibration oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .embedstore import (
    ClassVocab,
    Dataset,
    EmbeddingMatrix,
    Manifest,
    ManifestRecord,
)


@dataclass(frozen=True)
class SynthSpec:
    classes: int
    dim: int
    rows_per_class_dev: int
    rows_per_class_eval: int
    mean_scale: float = 1.0
    sigma: float = 1.0
    gain_jitter: tuple[float, float] | None = None
    noise_dims: int = 0
    folds: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("classes", "dim", "rows_per_class_dev", "rows_per_class_eval"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0 <= self.noise_dims <= self.dim:
            raise ValueError("noise_dims must lie in [0, dim]")
        if self.gain_jitter is not None:
            lo, hi = self.gain_jitter
            if not (0 < lo <= hi):
                raise ValueError("gain_jitter must be a positive (lo, hi) range")

    def class_names(self) -> tuple[str, ...]:
        width = max(3, len(str(self.classes - 1)))
        return tuple(f"c{i:0{width}d}" for i in range(self.classes))


def _draw_means(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    informative = spec.dim - spec.noise_dims
    means = np.zeros((spec.classes, spec.dim))
    if informative > 0:
        means[:, :informative] = (
            rng.standard_normal((spec.classes, informative)) * spec.mean_scale
        )
    return means


def gen_gaussian(spec: SynthSpec) -> Dataset:
    """Generate the dataset described by `spec`, fully seed-deterministic."""
    rng = np.random.default_rng(spec.seed)
    means = _draw_means(spec, rng)
    per_class = spec.rows_per_class_dev + spec.rows_per_class_eval
    total = spec.classes * per_class
    noise = rng.standard_normal((total, spec.dim)) * spec.sigma
    gains = None
    if spec.gain_jitter is not None:
        lo, hi = spec.gain_jitter
        gains = np.exp(rng.uniform(math.log(lo), math.log(hi), total))

    names = spec.class_names()
    rows = np.empty((total, spec.dim))
    records = []
    for ci in range(spec.classes):
        base = ci * per_class
        rows[base : base + per_class] = means[ci] + noise[base : base + per_class]
        for j in range(per_class):
            in_dev = j < spec.rows_per_class_dev
            split = "dev" if in_dev else "eval"
            local = j if in_dev else j - spec.rows_per_class_dev
            fold = (j % spec.folds) if spec.folds > 0 else None
            records.append(
                ManifestRecord(
                    id=f"{names[ci]}-{split}-{local:04d}",
                    labels=frozenset({names[ci]}),
                    split=split,
                    fold=fold,
                )
            )
    if gains is not None:
        rows *= gains[:, None]
    return Dataset(
        EmbeddingMatrix(rows.astype(np.float32)),
        Manifest(tuple(records)),
        ClassVocab(names),
    )


def spec_header(spec: SynthSpec) -> str:
    """One-line JSON echo of the spec, for the manifest header comment."""
    return "synth " + json.dumps(asdict(spec), sort_keys=True)


def bayes_accuracy(spec: SynthSpec, n_mc: int, seed: int) -> float:
    """Monte-Carlo estimate of the Bayes-optimal accuracy for `spec`.

    Uses the true generating means and the nearest-mean rule, which is
    Bayes-optimal here (isotropic shared covariance, equal priors).
    Not defined for jittered specs.
    """
    if spec.gain_jitter is not None:
        raise ValueError("Bayes accuracy is defined for specs without gain_jitter")
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    means = _draw_means(spec, np.random.default_rng(spec.seed))
    rng = np.random.default_rng(seed)
    correct = 0
    chunk = 8192
    remaining = n_mc
    while remaining > 0:
        take = min(chunk, remaining)
        labels = rng.integers(0, spec.classes, take)
        x = means[labels] + rng.standard_normal((take, spec.dim)) * spec.sigma
        d2 = (
            np.sum(x * x, axis=1)[:, None]
            - 2.0 * x @ means.T
            + np.sum(means * means, axis=1)[None, :]
        )
        correct += int(np.count_nonzero(np.argmin(d2, axis=1) == labels))
        remaining -= take
    return correct / n_mc
