"""Deterministic random streams.

Every random quantity in the package is drawn from a Philox (counter-based)
generator keyed by a tuple of integers: the master seed followed by the
indices that locate the draw (trial, replicate, path...). Two draws with the
same key are bitwise identical no matter which worker computes them or in
what order, so parallel runs reproduce serial ones exactly.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

DEFAULT_SEED = 20190611
SEED_ENV_VAR = "TAILBOOT_SEED"

T = TypeVar("T")
R = TypeVar("R")


def default_seed() -> int:
    """The seed used when none is given: ``$TAILBOOT_SEED`` or :data:`DEFAULT_SEED`."""
    value = os.environ.get(SEED_ENV_VAR)
    if value is None or value.strip() == "":
        return DEFAULT_SEED
    return int(value)


def substream(seed: int | Sequence[int], *key: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *key)``.

    ``seed`` may itself be a tuple, in which case ``key`` is appended to it.
    """
    if isinstance(seed, (tuple, list)):
        parts = tuple(int(s) for s in seed) + tuple(int(k) for k in key)
    else:
        parts = (int(seed),) + tuple(int(k) for k in key)
    if any(p < 0 for p in parts):
        raise ValueError(f"seed components must be nonnegative, got {parts}")
    ss = np.random.SeedSequence(entropy=parts[0], spawn_key=parts[1:])
    return np.random.Generator(np.random.Philox(ss))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally spread over a thread pool.

    Results come back in input order, so callers that key their randomness by
    item index get output independent of ``workers``.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunked(n: int, size: int) -> list[range]:
    return [range(lo, min(lo + size, n)) for lo in range(0, n, size)]
