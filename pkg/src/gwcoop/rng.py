"""Deterministic derivation of independent random streams.

Each Monte Carlo trial owns a stream keyed by the master seed and its
indices (trial number, grid cell, ...), so results never depend on how work
is split between workers.

Key derivation, bit-exact (all arithmetic modulo 2**64)::

    splitmix64(x):
        x = x + 0x9E3779B97F4A7C15
        z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    stream_key(seed, i1, ..., ik):
        h = splitmix64(seed)
        for i in (i1, ..., ik):
            h = splitmix64(h ^ i)
        return h

The stream itself is ``numpy.random.Generator(numpy.random.PCG64(key))``.
"""

from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 20240601
SEED_ENV = "GWCOOP_SEED"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, *indices: int) -> int:
    h = splitmix64(seed & MASK64)
    for i in indices:
        h = splitmix64(h ^ (i & MASK64))
    return h


def stream(seed: int, *indices: int) -> np.random.Generator:
    """Independent generator for the work item ``indices`` under ``seed``."""
    return np.random.Generator(np.random.PCG64(stream_key(seed, *indices)))


def default_seed() -> int:
    """Seed from the ``GWCOOP_SEED`` environment variable, else a fixed default."""
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    return int(raw, 0) & MASK64
