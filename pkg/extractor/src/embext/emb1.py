"""Writer/reader for the EMB1 embedding file format.

EMB1 is the consumer toolkit's wire format: magic ``EMB1``, u32-LE
version 1, u32-LE row count, u32-LE dimension, then row-major IEEE-754
binary32 little-endian values. Implemented here against the published
format description so this package stays decoupled from the consumer's
code.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import JobError

_HEADER = struct.Struct("<4sIII")


def write_emb1(rows: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(rows, dtype="<f4")
    if arr.ndim != 2:
        raise JobError("embedding block must be 2-D")
    if not np.isfinite(arr).all():
        raise JobError("refusing to write non-finite embedding values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"EMB1", 1, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_emb1(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, l = _HEADER.unpack_from(raw)
    if magic != b"EMB1" or version != 1:
        raise JobError(f"{path}: not an EMB1 v1 file")
    if len(raw) != _HEADER.size + n * l * 4:
        raise JobError(f"{path}: size does not match the header")
    return np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, l).copy()
