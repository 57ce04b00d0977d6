"""Reproducible per-replica random streams.

Every replica draws from its own Philox generator. The stream is keyed by the
master seed, a stable hash of the experiment name and the replica id, so a
replica's trajectory does not depend on how replicas are scheduled across
workers.
"""

from __future__ import annotations

import hashlib

import numpy as np


def name_key(name: str) -> int:
    """Stable 64-bit key of an experiment or stream name."""
    digest = hashlib.blake2b(name.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, name: str, replica_id: int = 0) -> np.random.Generator:
    """Generator for ``replica_id`` of the stream ``name`` under ``seed``."""
    if seed < 0 or replica_id < 0:
        raise ValueError("seed and replica id must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(name_key(name), int(replica_id)))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(int(rng), "default")
