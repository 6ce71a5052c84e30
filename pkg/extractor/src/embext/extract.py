"""Extraction pipelines: audio files to EMB1 + manifest, prompts to prototypes.

Output rows follow manifest record order exactly. Files that fail to
decode are logged and skipped; the manifest stays aligned with the
embedding rows that were actually written. The manifest header comment
records the encoder identifier and version for provenance.
"""

from __future__ import annotations

import json
import logging

import numpy as np

from .emb1 import write_emb1
from .encoders import get_encoder, load_wav
from .errors import JobError
from .jobfile import ExtractionJob

log = logging.getLogger("embext")


def _encoder_for(job: ExtractionJob, dim: int):
    return get_encoder(job.encoder, dim=dim)


def extract_audio(
    job: ExtractionJob, out_embeddings, out_manifest, dim: int = 512
) -> int:
    """Encode every readable audio item; returns the row count written."""
    encoder = _encoder_for(job, dim)
    rows: list[np.ndarray] = []
    kept = []
    for start in range(0, len(job.items), job.batch_size):
        for item in job.items[start : start + job.batch_size]:
            try:
                samples, rate = load_wav(item.path)
                rows.append(encoder.encode_audio(samples, rate))
            except (JobError, OSError, EOFError, ValueError) as exc:
                log.error("skipping %s: %s", item.path, exc)
                continue
            kept.append(item)
    width = rows[0].shape[0] if rows else encoder.dim
    matrix = np.vstack(rows) if rows else np.zeros((0, width), dtype=np.float32)
    write_emb1(matrix, out_embeddings)
    header = f"# encoder={encoder.name} version={encoder.version} dim={width}\n"
    with open(out_manifest, "w", encoding="utf-8") as fh:
        fh.write(header)
        for item in kept:
            obj = {"id": item.id, "labels": sorted(item.labels), "split": item.split}
            if item.fold is not None:
                obj["fold"] = item.fold
            fh.write(json.dumps(obj) + "\n")
    return len(kept)


def extract_text_prototypes(
    job: ExtractionJob, out_protos, dim: int = 512
) -> int:
    """Encode one prompt per class into a prototype file plus sidecar.

    Rows follow the prompt order; the ``<out>.classes`` sidecar names
    each row's class so the consumer can reorder to its vocabulary.
    """
    if not job.prompts:
        raise JobError("text extraction needs a prompt per class")
    encoder = _encoder_for(job, dim)
    classes = list(job.prompts)
    rows = [encoder.encode_text(job.prompts[c]) for c in classes]
    write_emb1(np.vstack(rows), out_protos)
    with open(f"{out_protos}.classes", "w", encoding="utf-8") as fh:
        for cls in classes:
            fh.write(cls + "\n")
    return len(classes)
