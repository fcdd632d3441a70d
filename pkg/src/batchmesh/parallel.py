"""Executors for data-parallel phases and the conditional-maximum claim table.

A phase is expressed as ``executor.map(fn, items)``; results come back in
item order whatever the execution order, so everything downstream of a
barrier is independent of scheduling.  Cross-item interaction goes only
through :class:`ClaimTable`, whose update is a commutative maximum.
"""

from __future__ import annotations

import contextlib
import random
import threading
from concurrent.futures import ThreadPoolExecutor


class SequentialExecutor:
    workers = 1
    concurrent = False

    def map(self, fn, items):
        return [fn(x) for x in items]

    def close(self):
        pass


class ThreadExecutor:
    """Chunked thread-pool map."""

    concurrent = True

    def __init__(self, workers: int = 4, min_chunk: int = 64):
        self.workers = workers
        self.min_chunk = min_chunk
        self._pool = ThreadPoolExecutor(max_workers=workers)

    def map(self, fn, items):
        items = list(items)
        n = len(items)
        if n < 2 * self.min_chunk or self.workers == 1:
            return [fn(x) for x in items]
        size = max(self.min_chunk, -(-n // self.workers))
        chunks = [items[i:i + size] for i in range(0, n, size)]
        futures = [self._pool.submit(lambda c: [fn(x) for x in c], c) for c in chunks]
        out = []
        for f in futures:
            out.extend(f.result())
        return out

    def close(self):
        self._pool.shutdown(wait=True)


class ShuffledExecutor:
    """Deterministically scrambled execution order, for interleaving tests.

    Items run one at a time in a random order drawn from ``seed``; results
    are still returned in item order.
    """

    concurrent = True

    def __init__(self, seed: int = 0, workers: int = 4):
        self.rng = random.Random(seed)
        self.workers = workers

    def map(self, fn, items):
        items = list(items)
        order = list(range(len(items)))
        self.rng.shuffle(order)
        out = [None] * len(items)
        for k in order:
            out[k] = fn(items[k])
        return out

    def close(self):
        pass


def make_executor(execution: str = "sequential", threads: int = 1, seed: int | None = None):
    if execution == "sequential":
        return SequentialExecutor()
    if execution == "parallel":
        return ThreadExecutor(max(1, threads))
    if execution == "shuffled":
        return ShuffledExecutor(seed or 0, max(1, threads))
    raise ValueError(f"unknown execution mode {execution!r}")


class ClaimTable:
    """Per-slot claims resolved by conditional maximum.

    ``claim(slot, key)`` leaves the slot holding the larger key, so after
    any interleaving of claims each slot holds the maximum key offered.
    """

    def __init__(self, concurrent: bool = False):
        self._slots: dict[int, tuple] = {}
        self._lock = threading.Lock() if concurrent else contextlib.nullcontext()

    def claim(self, slot: int, key) -> bool:
        """Offer key; True if the slot now holds it."""
        with self._lock:
            cur = self._slots.get(slot)
            if cur is None or key > cur:
                self._slots[slot] = key
                return True
            return cur == key

    def owner(self, slot: int):
        return self._slots.get(slot)

    def holds(self, slot: int, key) -> bool:
        return self._slots.get(slot) == key

    def clear(self):
        self._slots.clear()

    def __len__(self):
        return len(self._slots)
