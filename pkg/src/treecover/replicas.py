"""Deterministic fan-out of independent replicas over a process pool.

Each replica draws from its own stream keyed by ``(seed, name, replica_id)``,
so results do not depend on the worker count or on scheduling. Results are
always returned in replica-id order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial

from .rng import stream


def _run_chunk(fn, seed: int, name: str, ids: range, kwargs: dict) -> list:
    return [fn(stream(seed, name, i), **kwargs) for i in ids]


def _chunks(count: int, size: int) -> list[range]:
    return [range(a, min(a + size, count)) for a in range(0, count, size)]


def run_replicas(fn, count: int, seed: int, name: str, workers: int = 1, chunk: int = 64, **kwargs) -> list:
    """Evaluate ``fn(rng, **kwargs)`` for replica ids ``0..count-1``.

    ``fn`` must be a module-level callable when ``workers > 1``.
    """
    if count < 0:
        raise ValueError("replica count must be nonnegative")
    chunks = _chunks(count, max(1, chunk))
    job = partial(_run_chunk, fn, seed, name, kwargs=kwargs)
    if workers <= 1 or len(chunks) <= 1:
        parts = [job(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    return [r for part in parts for r in part]
