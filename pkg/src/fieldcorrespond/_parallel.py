"""Deterministic indexed map, optionally across a thread pool.

Work is keyed by index and results are assembled in index order, so the
thread count can never change the output."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def map_indexed(fn, count: int, threads: int = 1) -> list:
    if threads is None or threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, range(count)))
