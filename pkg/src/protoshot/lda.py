"""Linear discriminant analysis with a ridge-regularized pooled covariance.

The classifier is the shared-covariance Gaussian discriminant

    delta_c(x) = x' P^-1 mu_c - 0.5 * mu_c' P^-1 mu_c + ln pi_c,

with P = S + lambda * (trace(S)/m) * I, where S is the pooled
within-class scatter divided by max(1, rows - |C|). If trace(S) is zero
(e.g. one row per class) P falls back to the identity, reducing the
rule to nearest class mean. Priors are uniform: support sets are
balanced by construction. The ridge keeps the fit well-posed in the
rank-deficient regime (rows << m) that plain LDA cannot handle.

Fitting sorts each class's rows canonically before summation, so a
permutation of the training rows reproduces the model bit for bit.

Serialized model container (``LDA1``, little-endian):
    bytes 0-3   magic ``LDA1``
    bytes 4-7   u32 version = 1
    bytes 8-15  f64 lambda
    bytes 16-19 u32 class count
    bytes 20-23 u32 feature dimension m
    then        class-count f64 priors
    then        one complete EMB1 block holding the class means
    then        one complete EMB1 block holding the Cholesky factor of P

EMB1 blocks store binary32, so a save/load round-trip quantizes the
model to float32 precision.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError, NotEnoughClassesError

_MAGIC = b"LDA1"
_HEADER = struct.Struct("<4sIdII")


@dataclass(frozen=True)
class LdaModel:
    """Fitted discriminant model; immutable and safe to share."""

    means: np.ndarray  # (|C|, m) float64
    chol: np.ndarray  # (m, m) lower-triangular Cholesky factor of P
    priors: np.ndarray  # (|C|,)
    lam: float
    dim: int
    coef: np.ndarray = field(init=False, repr=False, compare=False)
    intercept: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if abs(float(self.priors.sum()) - 1.0) > 1e-12:
            raise DataError("class priors must sum to 1")
        for name in ("means", "chol", "priors"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        # delta_c(x) = x . coef[:, c] + intercept[c]
        alpha = np.linalg.solve(
            self.chol.T, np.linalg.solve(self.chol, self.means.T)
        )  # P^-1 mu_c, column per class
        intercept = -0.5 * np.sum(self.means.T * alpha, axis=0) + np.log(self.priors)
        object.__setattr__(self, "coef", alpha)
        object.__setattr__(self, "intercept", intercept)

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]


def _canonical_order(rows: np.ndarray) -> np.ndarray:
    """Sort rows lexicographically by their values."""
    return rows[np.lexsort(rows.T[::-1])]


def lda_fit(X: np.ndarray, y: np.ndarray, lam: float = 1e-4) -> LdaModel:
    """Fit class means and the regularized pooled covariance.

    Requires at least two classes, each with at least one row. `lam`
    scales the ridge term lambda * (trace(S)/m) * I.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be rows x m with one label per row")
    if not np.isfinite(X).all():
        raise DataError("training data contains non-finite values")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    classes = np.unique(y)
    if classes.size < 2:
        raise NotEnoughClassesError("LDA requires at least 2 classes")
    n_rows, m = X.shape
    n_classes = classes.size
    if not np.array_equal(classes, np.arange(n_classes)):
        raise ValueError("labels must be the contiguous class indices 0..|C|-1")

    means = np.empty((n_classes, m), dtype=np.float64)
    scatter = np.zeros((m, m), dtype=np.float64)
    for c in range(n_classes):
        rows = _canonical_order(X[y == c])
        means[c] = rows.sum(axis=0) / rows.shape[0]
        dev = rows - means[c]
        scatter += dev.T @ dev
    S = scatter / max(1, n_rows - n_classes)
    trace = float(np.trace(S))
    if trace == 0.0:
        pooled = np.eye(m)
    else:
        pooled = S + lam * (trace / m) * np.eye(m)
    try:
        chol = np.linalg.cholesky(pooled)
    except np.linalg.LinAlgError as exc:
        raise DataError(
            "pooled covariance is not positive definite; increase lambda"
        ) from exc
    priors = np.full(n_classes, 1.0 / n_classes)
    return LdaModel(means=means, chol=chol, priors=priors, lam=float(lam), dim=m)


def lda_discriminant_matrix(model: LdaModel, X: np.ndarray) -> np.ndarray:
    """Discriminant values for each row of X, shape (n, |C|). Higher is better."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.dim:
        raise ValueError(f"expected dimension {model.dim}, got {X.shape[1]}")
    return X @ model.coef + model.intercept


def lda_discriminants(model: LdaModel, x: np.ndarray) -> np.ndarray:
    """Per-class discriminant scores for one vector."""
    return lda_discriminant_matrix(model, np.asarray(x)[None, :])[0]


def lda_predict(model: LdaModel, x: np.ndarray) -> int:
    """Argmax of the discriminants; ties break to the lowest class index."""
    return int(np.argmax(lda_discriminants(model, x)))


def lda_predict_matrix(model: LdaModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(lda_discriminant_matrix(model, X), axis=1)


def _emb1_bytes(arr: np.ndarray) -> bytes:
    from .embedstore import _HEADER as EMB_HEADER

    n, l = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return EMB_HEADER.pack(b"EMB1", 1, n, l) + payload


def save_lda(model: LdaModel, path) -> None:
    """Write the LDA1 container documented in the module docstring."""
    header = _HEADER.pack(_MAGIC, 1, model.lam, model.n_classes, model.dim)
    priors = np.ascontiguousarray(model.priors, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(priors)
        fh.write(_emb1_bytes(model.means))
        fh.write(_emb1_bytes(model.chol))


def load_lda(path) -> LdaModel:
    """Read an LDA1 container; float32 block precision applies."""
    from .embedstore import _HEADER as EMB_HEADER

    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: not an LDA1 container")
    _, version, lam, n_classes, dim = _HEADER.unpack_from(raw)
    if version != 1:
        raise FormatError(f"{path}: unsupported LDA1 version {version}")
    offset = _HEADER.size
    priors = np.frombuffer(raw, dtype="<f8", count=n_classes, offset=offset).copy()
    offset += n_classes * 8

    def read_block(offset: int) -> tuple[np.ndarray, int]:
        if len(raw) < offset + EMB_HEADER.size:
            raise FormatError(f"{path}: truncated embedded block")
        magic, ver, n, l = EMB_HEADER.unpack_from(raw, offset)
        if magic != b"EMB1" or ver != 1:
            raise FormatError(f"{path}: malformed embedded block")
        start = offset + EMB_HEADER.size
        end = start + n * l * 4
        if len(raw) < end:
            raise FormatError(f"{path}: truncated embedded block payload")
        arr = np.frombuffer(raw[start:end], dtype="<f4").reshape(n, l)
        return arr.astype(np.float64), end

    means, offset = read_block(offset)
    chol, offset = read_block(offset)
    if means.shape != (n_classes, dim) or chol.shape != (dim, dim):
        raise FormatError(f"{path}: block shapes disagree with the header")
    return LdaModel(means=means, chol=chol, priors=priors, lam=lam, dim=dim)
