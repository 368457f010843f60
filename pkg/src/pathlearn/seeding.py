"""Seed derivation.

Every random draw in the package is a pure function of an explicit integer
seed. Child seeds are derived from a root seed and a tuple of non-negative
integer keys (a counter path) through ``numpy.random.SeedSequence``, so any
single query or trial can be re-run in isolation:

    derive_seed(root, i, j)          # path query (i, j)
    derive_seed(query_seed, x_i)     # one intervention value inside a query

Distinct key paths give statistically independent streams.
"""
from __future__ import annotations

import numpy as np


def derive_seed(root: int, *keys: int) -> int:
    seq = np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, np.uint64)[0])


def rng(seed: int, *keys: int) -> np.random.Generator:
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.default_rng(seed)
