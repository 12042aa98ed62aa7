# utils/streams.py
"""
Reproducible random streams.

Stream g of seed s is SeedSequence(entropy=s, spawn_key=(g,)): every
(seed, stream) pair is a distinct, statistically independent stream, and
the same pair always yields the same numbers whichever thread consumes it.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

from exceptions import ValidationError

T = TypeVar("T")


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    if not 0 <= int(seed) < 2 ** 64:
        raise ValidationError("seed must be a 64-bit unsigned integer", field="seed")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),)))


def map_streams(task: Callable[[np.random.Generator, int], T], seed: int, n_streams: int,
                threads: int = 1) -> List[T]:
    """Runs task(rng, index) for each stream; results come back in stream order."""
    rngs = [stream_rng(seed, g) for g in range(n_streams)]
    if threads <= 1 or n_streams == 1:
        return [task(rng, g) for g, rng in enumerate(rngs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, rngs, range(n_streams)))


def pairwise_sum(values: Sequence[float]) -> float:
    """Fixed-order tree reduction, independent of how partials were produced."""
    items = [float(v) for v in values]
    if not items:
        return 0.0
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]
