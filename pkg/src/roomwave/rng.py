"""Deterministic RNG streams keyed by structured identifiers.

Every stochastic step (scene generation, perturbation copies, observation
draws) gets its own generator derived from a root seed plus a key tuple, so
results are independent of execution order and worker count. String keys are
folded through sha256 — never Python's salted hash().
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFFFFFFFFFF
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"rng key must be int or str, got {type(key).__name__}")


def stream(root_seed: int, *keys) -> np.random.Generator:
    """Independent generator for (root_seed, *keys)."""
    entropy = [int(root_seed) & 0xFFFFFFFFFFFFFFFF] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(root_seed: int, *keys) -> int:
    """Stable 63-bit child seed for embedding into records (e.g. Scene.rng_seed)."""
    ss = np.random.SeedSequence(
        [int(root_seed) & 0xFFFFFFFFFFFFFFFF] + [_key_to_int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)
