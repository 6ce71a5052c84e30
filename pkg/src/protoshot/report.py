"""Report serialization: line-delimited JSON and CSV tables.

All writers are atomic (temp file + rename) and deterministic: no
timestamps, locale-independent formatting, stable key order. Floats are
serialized with ``repr`` round-trip precision.
"""

from __future__ import annotations

import csv
import io
import json
import os

from .evaluation import ConfusionMatrix, EvalReport, KfoldResult, SweepResult


def atomic_write_bytes(path, data: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report_jsonl(reports, path) -> None:
    """One JSON object per report line."""
    lines = [json.dumps(r.to_dict()) for r in reports]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def write_runs_csv(rows: list[dict], path, fieldnames: list[str]) -> None:
    """Generic one-row-per-run table."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_fmt(row.get(f)) for f in fieldnames])
    atomic_write_text(path, buf.getvalue())


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    """Counts with class-name header row and column; rows are true classes."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["true\\pred", *cm.vocab.classes])
    for ci, cls in enumerate(cm.vocab.classes):
        writer.writerow([cls, *[int(v) for v in cm.counts[ci]]])
    atomic_write_text(path, buf.getvalue())


def write_sweep_csv(result: SweepResult, path) -> None:
    """Plot-ready table: one (value, mean, std) row per sweep point."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["value", "mean", "std"])
    for p in result.points:
        writer.writerow([_fmt(p.value), _fmt(p.mean), _fmt(p.std)])
    atomic_write_text(path, buf.getvalue())


def sweep_run_rows(result: SweepResult) -> list[dict]:
    rows = []
    for p in result.points:
        for i, (seed, value) in enumerate(zip(p.seeds, p.runs)):
            rows.append({"value": p.value, "run": i, "seed": seed, "metric": value})
    return rows


def write_kfold_csv(result: KfoldResult, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fold", "metric"])
    for fold, rep in zip(result.folds, result.reports):
        writer.writerow([fold, _fmt(rep.value)])
    writer.writerow(["pooled_mean", _fmt(result.pooled_mean)])
    atomic_write_text(path, buf.getvalue())


def write_support_jsonl(support_ids: dict[str, tuple[str, ...]], path) -> None:
    """Pin the sampled support ids: one {"class", "ids"} object per line."""
    lines = [
        json.dumps({"class": cls, "ids": list(support_ids[cls])})
        for cls in sorted(support_ids)
    ]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def report_run_row(report: EvalReport, run: int = 0, value=None) -> dict:
    return {"value": value, "run": run, "seed": report.seed, "metric": report.value}
