"""Deterministic random-stream derivation.

Every stochastic component draws from its own child stream keyed by a base
seed, a purpose label, and integer indices, so results never depend on
execution order and any stream can be re-derived by external tooling:

    child = SeedSequence([base_seed, crc32(label), *indices])
"""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed_sequence(base_seed: int, label: str, *indices: int) -> np.random.SeedSequence:
    entropy = [int(base_seed) & 0xFFFFFFFF, zlib.crc32(label.encode("utf-8"))]
    entropy.extend(int(i) & 0xFFFFFFFF for i in indices)
    return np.random.SeedSequence(entropy)


def derive_rng(base_seed: int, label: str, *indices: int) -> np.random.Generator:
    """PCG64 generator on the derived stream."""
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(base_seed, label, *indices)))
