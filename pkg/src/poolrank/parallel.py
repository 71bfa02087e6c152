"""Bounded worker-thread helper.

Work items carry their own deterministic seeds, so results never depend on
scheduling; the env variable POOLRANK_THREADS caps the worker count (1
disables threading entirely).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "POOLRANK_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(1, count)


def map_parallel(fn, items):
    """Apply ``fn`` over ``items`` preserving order, threaded if allowed."""
    items = list(items)
    workers = min(worker_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
