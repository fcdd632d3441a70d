"""Round-based tuple-list expansion with operation windows.

Each round applies a predicate to every valid tuple in the window
``[left, right]`` and runs the matching operation, which may emit a bounded
number of new tuples.  Emissions are placed after ``right`` at offsets
reserved by an exclusive prefix sum over per-tuple counts, i.e. in
(source index, emission slot) order, which keeps sequential runs
bit-deterministic and parallel runs order-independent.  Invalid tuples are
compacted away only when the window is large enough to be worth it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .parallel import SequentialExecutor

DEFAULT_COMPACTION_THRESHOLD = 1024
DEFAULT_CAPACITY = 2 ** 26


class CapacityExceeded(RuntimeError):
    pass


class FanOutExceeded(RuntimeError):
    pass


@dataclass
class CompactionPolicy:
    threshold: int = DEFAULT_COMPACTION_THRESHOLD
    enabled: bool = True


def should_compact(window_size: int, policy: CompactionPolicy) -> bool:
    """Compact only under high workload (window at or above the threshold)."""
    if not policy.enabled:
        return False
    return window_size >= policy.threshold


@dataclass
class TupleList:
    items: list = field(default_factory=list)
    valid: list = field(default_factory=list)
    left: int = 0
    right: int = -1

    @classmethod
    def of(cls, items):
        items = list(items)
        return cls(items, [True] * len(items), 0, len(items) - 1)

    def __len__(self):
        return len(self.items)

    def append(self, item):
        self.items.append(item)
        self.valid.append(True)

    def invalidate(self, i):
        self.valid[i] = False

    def valid_items(self):
        return [x for x, ok in zip(self.items, self.valid) if ok]

    @property
    def done(self) -> bool:
        return self.left > self.right


# An op returns the tuples it emits and whether its own tuple stays valid,
# optionally followed by tuples for the side list.
OpResult = tuple  # (emitted, keep) or (emitted, keep, side)


@dataclass
class ExpandHooks:
    predicate: Callable[[Any], bool]
    op_true: Callable[[Any], OpResult]
    op_false: Callable[[Any], OpResult]
    fan_out: int = 4
    # optional barrier hook, called with (list, first_new, last_new) after
    # emissions are placed; may invalidate new tuples
    after_round: Callable[[TupleList, int, int], None] | None = None
    # optional per-round hook returning True to stop expanding early
    stop_after_round: Callable[[TupleList, int], bool] | None = None
    # ops may return a third element: tuples for this other list
    side_list: TupleList | None = None


@dataclass
class ExpandStats:
    rounds: int = 0
    processed: int = 0
    emitted: int = 0
    compactions: int = 0
    window_sizes: list = field(default_factory=list)
    stopped_early: bool = False


def expand(tl: TupleList, hooks: ExpandHooks, compaction: CompactionPolicy | None = None,
           executor=None, capacity: int = DEFAULT_CAPACITY, max_rounds: int | None = None,
           stats: ExpandStats | None = None) -> TupleList:
    """Expand ``tl`` in place until its window is empty.

    With ``max_rounds`` the expansion may return with a non-empty window;
    calling ``expand`` again resumes where it stopped (carry-forward).
    When compaction triggers, invalid tuples are dropped from the list;
    otherwise they remain with ``valid`` False.
    """
    compaction = compaction or CompactionPolicy()
    executor = executor or SequentialExecutor()
    stats = stats if stats is not None else ExpandStats()
    if tl.right < tl.left and tl.left == 0:
        tl.right = len(tl.items) - 1
    rounds = 0
    while tl.left <= tl.right:
        if max_rounds is not None and rounds >= max_rounds:
            break
        lo, hi = tl.left, tl.right
        idx = [i for i in range(lo, hi + 1) if tl.valid[i]]
        if not idx:
            tl.left = hi + 1
            continue
        window = [tl.items[i] for i in idx]

        def run(item):
            if hooks.predicate(item):
                return hooks.op_true(item)
            return hooks.op_false(item)

        results = executor.map(run, window)
        counts = np.fromiter((len(r[0]) for r in results), dtype=np.int64, count=len(results))
        if counts.size and counts.max() > hooks.fan_out:
            raise FanOutExceeded(f"op emitted {int(counts.max())} > {hooks.fan_out} tuples")
        offsets = np.concatenate(([0], np.cumsum(counts))) if counts.size else np.zeros(1, np.int64)
        total = int(offsets[-1])
        if len(tl.items) + total > capacity:
            raise CapacityExceeded(f"tuple list would exceed {capacity} entries")
        base = len(tl.items)
        tl.items.extend([None] * total)
        tl.valid.extend([True] * total)
        for k, (i, res) in enumerate(zip(idx, results)):
            emitted, keep = res[0], res[1]
            if not keep:
                tl.valid[i] = False
            start = base + int(offsets[k])
            tl.items[start:start + len(emitted)] = list(emitted)
            if len(res) > 2 and res[2]:
                if hooks.side_list is None:
                    raise ValueError("op emitted side tuples but no side list is set")
                for item in res[2]:
                    hooks.side_list.append(item)
        stats.rounds += 1
        stats.processed += len(window)
        stats.emitted += total
        stats.window_sizes.append(len(window))
        rounds += 1
        if hooks.after_round is not None and total:
            hooks.after_round(tl, base, base + total - 1)

        new_left = hi + 1
        if should_compact(hi - lo + 1, compaction):
            keep_idx = [i for i in range(len(tl.items)) if tl.valid[i]]
            new_left = sum(1 for i in keep_idx if i <= hi)
            tl.items = [tl.items[i] for i in keep_idx]
            tl.valid = [True] * len(keep_idx)
            stats.compactions += 1
        tl.left, tl.right = new_left, len(tl.items) - 1
        if hooks.stop_after_round is not None and hooks.stop_after_round(tl, rounds):
            stats.stopped_early = True
            break
    return tl


def sequential_worklist(seeds, predicate, op_true, op_false):
    """Plain FIFO worklist reference: same hooks, one tuple at a time."""
    from collections import deque

    out = []
    queue = deque(seeds)
    while queue:
        item = queue.popleft()
        res = (op_true if predicate(item) else op_false)(item)
        emitted, keep = res[0], res[1]
        if keep:
            out.append(item)
        queue.extend(emitted)
    return out
