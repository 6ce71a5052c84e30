import numpy as np

from protoshot import EmbeddingMatrix, Manifest, ManifestRecord, bind


def make_dataset(rows, labels, splits=None, folds=None, ids=None):
    """Assemble a dataset from plain lists.

    `labels` holds one label string or an iterable of labels per row;
    `splits` defaults to all-dev.
    """
    rows = np.asarray(rows, dtype=np.float32)
    n = rows.shape[0]
    splits = splits or ["dev"] * n
    folds = folds or [None] * n
    ids = ids or [f"r{i:04d}" for i in range(n)]
    records = []
    for i in range(n):
        lab = labels[i]
        labelset = frozenset([lab] if isinstance(lab, str) else lab)
        records.append(
            ManifestRecord(id=ids[i], labels=labelset, split=splits[i], fold=folds[i])
        )
    return bind(EmbeddingMatrix(rows), Manifest(tuple(records)))
