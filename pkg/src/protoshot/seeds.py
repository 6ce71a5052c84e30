"""Deterministic seed derivation.

All randomness in the toolkit flows from a single 64-bit master seed.
Sub-seeds for runs, sweep points, folds, and per-class sampling streams
are derived with :func:`derive_seed`, a pure function, so any unit of
work can be recomputed independently (and in parallel) with an identical
random stream.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master: int, index: int) -> int:
    """Derive the sub-seed for unit `index` under `master`.

    SplitMix64 finalizer applied to ``master + (index + 1) * golden``;
    the +1 keeps index 0 from collapsing onto the raw master seed.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    z = (master + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def class_rng(seed: int, class_index: int) -> np.random.Generator:
    """Independent generator for one class's sampling sub-stream.

    Keyed by (seed, class index) so the draw for a class does not depend
    on how many classes precede it or on iteration order.
    """
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK64, class_index]))
