"""Chunked thread fan-out for the compiled kernels.

Kernels release the GIL and write disjoint output slots, so results do not
depend on the number of threads.  The thread count comes from the
``LYAPBIF_THREADS`` environment variable (default: ``os.cpu_count()``).
"""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "LYAPBIF_THREADS"


def thread_count() -> int:
    v = os.environ.get(THREADS_ENV, "").strip()
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_chunks(kernel, n: int, *args, chunk: int = 256):
    """Call ``kernel(*args, start, stop)`` over ``[0, n)`` in fixed-size chunks."""
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    threads = thread_count()
    if threads == 1 or len(bounds) <= 1:
        for lo, hi in bounds:
            kernel(*args, lo, hi)
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        for f in [ex.submit(kernel, *args, lo, hi) for lo, hi in bounds]:
            f.result()
