"""Deterministic chunked execution of replica work."""

import os
from concurrent.futures import ThreadPoolExecutor

CHUNK = 8192


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get("IDPE_THREADS", "1")))
    except ValueError:
        return 1


def chunk_sizes(n: int, chunk: int = CHUNK):
    full, rest = divmod(int(n), chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn, n: int, chunk: int = CHUNK):
    """Apply ``fn(chunk_index, size)`` to fixed-size chunks; results in chunk order.

    Chunk boundaries never depend on the worker count, so outputs are
    identical for any ``IDPE_THREADS``.
    """
    jobs = list(enumerate(chunk_sizes(n, chunk)))
    workers = min(n_workers(), len(jobs))
    if workers <= 1:
        return [fn(i, m) for i, m in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))
