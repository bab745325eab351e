"""Deterministic seed derivation.

Every random draw in the package flows from a scenario seed through named
sub-streams, so results are reproducible regardless of evaluation order or
worker count. Sub-streams are keyed by arbitrary (str | int) parts hashed
with blake2b; Python's builtin hash() is process-salted and never used.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stable_u64(*parts: str | int | float) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def rng_for(*parts: str | int | float) -> np.random.Generator:
    """Counter-based generator keyed by the hashed parts (order matters)."""
    return np.random.Generator(np.random.Philox(key=stable_u64(*parts)))
