"""Deterministic row-block parallelism.

BLAS kernels are not bitwise reproducible across their own thread counts,
so engine hot loops never let BLAS parallelize a reduction.  Instead, work
is split into row blocks whose boundaries depend only on the problem size,
each block runs its math under a single BLAS thread, and blocks are farmed
out to Python worker threads (BLAS calls release the GIL).  Outputs land
in disjoint row ranges, so any worker count produces identical bytes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_limits


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers < 1:
        return max(1, os.cpu_count() or 1)
    return workers


def run_blocks(fn, n: int, block: int, workers: int | None = 1) -> None:
    """Invoke fn(start, stop) over [0, n) in fixed blocks, possibly in parallel.

    fn must write only to rows [start, stop) of its outputs.  Block
    boundaries must not depend on the worker count.
    """
    spans = [(start, min(start + block, n)) for start in range(0, n, block)]
    workers = resolve_workers(workers)
    with threadpool_limits(limits=1):
        if workers == 1 or len(spans) == 1:
            for start, stop in spans:
                fn(start, stop)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                # list() propagates worker exceptions
                list(pool.map(lambda span: fn(*span), spans))
