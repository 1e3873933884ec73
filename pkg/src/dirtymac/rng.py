"""Deterministic random-stream and worker-pool utilities.

Every Monte Carlo routine in the package draws from a substream keyed by
(seed, role, indices...) instead of sharing one sequential generator, so
results are bit-for-bit reproducible no matter how the work is scheduled.
``DIRTYMAC_THREADS`` caps the thread pool; chunk boundaries are fixed
constants, never derived from the pool size, so the chunk-to-stream
mapping is identical for 1 and N workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

# Stream roles.  Each (role, user, layer, chunk) tuple owns one stream.
INTERFERENCE, NOISE, DITHER, CODEWORD, TRIAL, SAMPLE = range(6)

CHUNK = 1 << 16

T = TypeVar("T")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for (seed, key)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def worker_count() -> int:
    """Worker cap from DIRTYMAC_THREADS (default 1, i.e. sequential)."""
    raw = os.environ.get("DIRTYMAC_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_chunks(total: int, fn: Callable[[int, int, int], T], chunk: int = CHUNK) -> list[T]:
    """Apply ``fn(chunk_index, start, stop)`` over [0, total) in fixed chunks.

    Results come back ordered by chunk index whether or not a thread pool
    is used, so any reduction over them is schedule-independent.  ``fn``
    must derive all randomness from its chunk index.
    """
    spans = [(ci, lo, min(lo + chunk, total))
             for ci, lo in enumerate(range(0, total, chunk))]
    workers = worker_count()
    if workers <= 1 or len(spans) <= 1:
        return [fn(*span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: fn(*span), spans))
