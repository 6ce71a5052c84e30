"""Extraction job definitions and their line-delimited file formats.

Job files use the same shape as the consumer's manifests: one JSON
object per line, blank lines and ``#`` comments ignored. Audio job
lines carry ``path``, ``labels``, ``split`` and optional ``fold`` and
``id`` (default: the file stem). Prompt files carry ``class`` and
``prompt``, one line per class.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import JobError


@dataclass(frozen=True)
class AudioItem:
    path: str
    labels: tuple[str, ...]
    split: str
    fold: int | None = None
    id: str = ""


@dataclass(frozen=True)
class ExtractionJob:
    """Everything one extraction run needs.

    Every referenced audio path must exist at job construction; decode
    failures at extraction time are logged and skipped instead.
    """

    items: tuple[AudioItem, ...]
    encoder: str = "clap"
    batch_size: int = 16
    prompts: dict[str, str] | None = None  # class -> text, when extracting text

    def __post_init__(self):
        if self.batch_size < 1:
            raise JobError("batch size must be at least 1")
        seen: set[str] = set()
        for item in self.items:
            if not os.path.exists(item.path):
                raise JobError(f"audio file does not exist: {item.path}")
            if item.id in seen:
                raise JobError(f"duplicate item id {item.id!r}")
            seen.add(item.id)
        if self.prompts is not None:
            classes = self.classes()
            missing = classes - set(self.prompts)
            if missing:
                raise JobError(f"missing prompts for classes: {sorted(missing)}")
            extra = set(self.prompts) - classes
            if self.items and extra:
                raise JobError(f"prompts for unknown classes: {sorted(extra)}")

    def classes(self) -> set[str]:
        out: set[str] = set()
        for item in self.items:
            out.update(item.labels)
        return out


def _iter_json_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                yield lineno, json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise JobError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc


def read_job_lines(path) -> tuple[AudioItem, ...]:
    items = []
    for lineno, obj in _iter_json_lines(path):
        fpath = obj.get("path")
        labels = obj.get("labels")
        split = obj.get("split", "dev")
        if not isinstance(fpath, str) or not fpath:
            raise JobError(f"{path}:{lineno}: missing 'path'")
        if not isinstance(labels, list) or not labels:
            raise JobError(f"{path}:{lineno}: 'labels' must be a non-empty array")
        if split not in ("dev", "eval"):
            raise JobError(f"{path}:{lineno}: split must be 'dev' or 'eval'")
        item_id = obj.get("id") or os.path.splitext(os.path.basename(fpath))[0]
        items.append(
            AudioItem(
                path=fpath,
                labels=tuple(labels),
                split=split,
                fold=obj.get("fold"),
                id=item_id,
            )
        )
    return tuple(items)


def read_prompts(path) -> dict[str, str]:
    prompts: dict[str, str] = {}
    for lineno, obj in _iter_json_lines(path):
        cls, text = obj.get("class"), obj.get("prompt")
        if not isinstance(cls, str) or not isinstance(text, str):
            raise JobError(f"{path}:{lineno}: need 'class' and 'prompt' strings")
        if cls in prompts:
            raise JobError(f"{path}:{lineno}: duplicate prompt for class {cls!r}")
        prompts[cls] = text
    return prompts
