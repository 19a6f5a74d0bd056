"""Chunked thread-pool execution with a determinism-preserving contract.

Work is split into fixed ranges decided by ``chunk_size`` alone, never by
the thread count, and every worker writes only into its own output slice.
Results are therefore bit-identical whether the pool has 1 thread or 16.
The kernels release the GIL, so plain ``ThreadPoolExecutor`` threads give
real parallelism without any serialization of inputs.

``WINDVOX_THREADS``, when set, caps the effective thread count everywhere.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["resolve_thread_count", "chunk_ranges", "run_chunked"]


def resolve_thread_count(requested: int | None = None) -> int:
    """Effective thread count: ``requested`` (or cpu_count), capped by the
    WINDVOX_THREADS environment variable if present."""
    cap = None
    env = os.environ.get("WINDVOX_THREADS")
    if env:
        cap = max(1, int(env))
    n = requested if requested is not None else (cap or os.cpu_count() or 1)
    if cap is not None:
        n = min(n, cap)
    return max(1, int(n))


def chunk_ranges(n_items: int, chunk_size: int) -> list[tuple[int, int]]:
    """[(start, stop), ...] covering range(n_items) in fixed-size pieces."""
    chunk = max(1, int(chunk_size))
    return [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]


def run_chunked(worker, n_items: int, chunk_size: int, thread_count: int | None = None) -> None:
    """Run ``worker(start, stop)`` over every chunk, possibly in parallel.

    ``worker`` must confine its writes to the [start, stop) slice of any
    shared output; under that contract the scheduling order is irrelevant.
    """
    ranges = chunk_ranges(n_items, chunk_size)
    threads = resolve_thread_count(thread_count)
    if threads == 1 or len(ranges) <= 1:
        for start, stop in ranges:
            worker(start, stop)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # list() re-raises the first worker exception, if any.
        list(pool.map(lambda r: worker(*r), ranges))
