"""Figure rendering for run reports.

Renders the same quantities the CSV tables carry: sweep curves with
error bars, confusion-matrix heatmaps, per-class AP bars, and per-fold
bars. Figures are written atomically and reproducibly: fixed dpi, Agg
backend, no embedded timestamps or version metadata, so identical
inputs yield byte-identical PNG files.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConfusionMatrix, KfoldResult, SweepResult
from .report import atomic_write_bytes

_DPI = 120
_PNG_METADATA = {"Software": None}  # strip the version string for reproducibility


def _save(fig, path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=_DPI, metadata=_PNG_METADATA)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


_AXIS_LABELS = {
    "support_size": "Training samples per class",
    "K": "K ratio (kept features = K * |C|)",
}


def save_sweep_figure(result: SweepResult, path, ylabel: str = "Accuracy") -> None:
    xs = [p.value for p in result.points]
    means = [p.mean for p in result.points]
    stds = [0.0 if p.std is None else p.std for p in result.points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel(_AXIS_LABELS.get(result.axis, result.axis))
    ax.set_ylabel(f"{ylabel} (mean ± std over {result.r} runs)")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    _save(fig, path)


def save_confusion_figure(cm: ConfusionMatrix, path) -> None:
    n = len(cm.vocab)
    fig, ax = plt.subplots(figsize=(max(4, n * 0.35), max(3.5, n * 0.35)))
    im = ax.imshow(cm.counts, cmap="viridis")
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_xticks(range(n), cm.vocab.classes, rotation=90, fontsize=7)
    ax.set_yticks(range(n), cm.vocab.classes, fontsize=7)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    _save(fig, path)


def save_per_class_ap_figure(classes, aps, path) -> None:
    aps = np.asarray(aps, dtype=float)
    fig, ax = plt.subplots(figsize=(max(4, len(classes) * 0.3), 4))
    ax.bar(range(len(classes)), np.nan_to_num(aps))
    ax.set_xticks(range(len(classes)), classes, rotation=90, fontsize=7)
    ax.set_ylabel("Average precision")
    ax.set_ylim(0, 1)
    fig.tight_layout()
    _save(fig, path)


def save_fold_figure(result: KfoldResult, path, ylabel: str = "Accuracy") -> None:
    values = [r.value for r in result.reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([str(f) for f in result.folds], values)
    ax.axhline(result.pooled_mean, color="red", linestyle="--", label="pooled mean")
    ax.set_xlabel("fold")
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
