"""Seed-keyed random substreams and the block-parallel runner.

Work is cut into fixed-size blocks; block ``b`` of a task tagged ``tag``
always draws from ``SeedSequence(seed, spawn_key=(tag, b))``.  The block
layout does not depend on the thread count, so results are bit-identical
for any ``threads`` value.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

THREADS_ENV = "CRITIQ_THREADS"

# task tags; part of the reproducibility contract, never renumber
CYCLES = 1
SERIES = 2
PATHS = 3


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def run_blocks(
    work: Callable[[np.random.Generator, int, int], None],
    n_items: int,
    block: int,
    seed: int,
    tag: int,
    threads: int | None = None,
) -> None:
    """Call ``work(rng, start, stop)`` for each block of ``[0, n_items)``.

    ``work`` writes its results into caller-owned arrays at ``[start:stop]``.
    """
    starts = range(0, n_items, block)
    jobs = [(substream(seed, tag, b), s, min(s + block, n_items)) for b, s in enumerate(starts)]
    threads = resolve_threads(threads)
    if threads == 1 or len(jobs) == 1:
        for job in jobs:
            work(*job)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for fut in [pool.submit(work, *job) for job in jobs]:
            fut.result()
