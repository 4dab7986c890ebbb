"""Seed derivation and bounded parallel mapping."""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor

_MASK = (1 << 64) - 1

THREADS_ENV = "COCLUSTER_THREADS"

_in_worker = threading.local()


def hash64(*parts: int) -> int:
    """Mix integer parts into one unsigned 64-bit value (splitmix64 chain).

    Used to derive independent, individually replayable sub-seeds, e.g. one
    per simulation run or per grid cell. Pure integer arithmetic, stable
    across platforms and library versions.
    """
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h ^ (int(p) & _MASK)) & _MASK
        h = (h + 0x9E3779B97F4A7C15) & _MASK
        z = h
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        h = (z ^ (z >> 31)) & _MASK
    return h


def thread_cap() -> int:
    """Worker cap: COCLUSTER_THREADS if set, else the logical CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Map `fn` over `items`, preserving order.

    Runs on a thread pool capped by :func:`thread_cap` when that helps;
    nested calls (from inside a worker) run sequentially so pools never
    stack. Results are gathered by index, so the outcome does not depend
    on scheduling.
    """
    items = list(items)
    workers = min(thread_cap(), len(items))
    if workers <= 1 or getattr(_in_worker, "active", False):
        return [fn(it) for it in items]

    def run(it):
        _in_worker.active = True
        try:
            return fn(it)
        finally:
            _in_worker.active = False

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, items))
