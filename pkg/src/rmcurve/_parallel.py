"""Worker pool sizing shared by the scans and the samplers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "RMCURVE_THREADS"


def worker_count() -> int:
    """Number of worker threads: ``RMCURVE_THREADS`` if set, otherwise the CPU count."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return cpus
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def ordered_map(func, items):
    """``list(map(func, items))`` on the worker pool; results keep the input order."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [func(v) for v in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
