"""Seed fan-out and optional process-level parallelism."""

import os
from multiprocessing import get_context
from zlib import crc32

import numpy as np


def child_seed(master_seed, *tags):
    """Derive an independent child seed from a master seed and a tag path.

    Adding members/folds never reshuffles earlier ones because each child
    depends only on (master_seed, tags).
    """
    parts = [int(master_seed) & 0xFFFFFFFF]
    for t in tags:
        parts.append(crc32(t.encode()) if isinstance(t, str) else int(t) & 0xFFFFFFFF)
    ss = np.random.SeedSequence(parts)
    return int(ss.generate_state(1, np.uint64)[0])


def pmap(fn, items, workers=1):
    """Ordered map, optionally fanned out over forked worker processes.

    Results are assembled in input order, so the output is identical for any
    worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    workers = min(workers, len(items))
    with get_context("fork").Pool(workers) as pool:
        return pool.map(fn, items, chunksize=1)


def default_workers():
    env = os.environ.get("LOSTCIRC_THREADS")
    if env:
        return max(1, int(env))
    return 1
