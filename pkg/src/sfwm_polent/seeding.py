"""Deterministic RNG streams derived from one top-level seed.

A stream is keyed by ``(seed, *keys)``.  String keys hash through CRC-32,
floats are rounded to milli-units (so width 700.0 nm -> 700000) and ints pass
through; the resulting integer tuple seeds a numpy ``SeedSequence``.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (bool, np.bool_)):
        return int(k)
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError(f"seed keys must be non-negative, got {k}")
        return int(k)
    if isinstance(k, (float, np.floating)):
        return int(round(float(k) * 1000))
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    raise TypeError(f"unsupported seed key {k!r}")


def seed_sequence(seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_key(seed), *(_key(k) for k in keys)])


def make_rng(seed, *keys) -> np.random.Generator:
    """Generator for ``(seed, *keys)``; an existing Generator is returned as is."""
    if isinstance(seed, np.random.Generator):
        if keys:
            raise ValueError("cannot derive keyed streams from a Generator")
        return seed
    return np.random.default_rng(seed_sequence(seed, *keys))


def derive_seed(seed: int, *keys) -> int:
    """A 32-bit integer seed for the stream ``(seed, *keys)``."""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint32)[0])
