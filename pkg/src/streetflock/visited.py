"""Per-walker distinct-node bookkeeping backing the mobility score.

Two exact backends: plain per-walker sets, and an open-addressing hash over
(walker, node) keys jitted with numba for full-scale runs. Both produce
identical counts; the hash avoids holding millions of Python set entries.
"""

from __future__ import annotations

import numpy as np

_HASH_THRESHOLD = 50_000  # walkers; below this plain sets are cheap enough

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without the extra
    numba = None


class SetVisitedTracker:
    """One Python set per walker."""

    def __init__(self, num_walkers: int, num_nodes: int) -> None:
        self.num_nodes = num_nodes
        self.counts = np.zeros(num_walkers, dtype=np.int64)
        self._sets: list[set[int]] = [set() for _ in range(num_walkers)]

    def add(self, nodes: np.ndarray) -> None:
        counts = self.counts
        for i, (s, v) in enumerate(zip(self._sets, nodes.tolist())):
            if v not in s:
                s.add(v)
                counts[i] += 1

    def visited_sets(self) -> list[set[int]]:
        return [set(s) for s in self._sets]


if numba is not None:

    @numba.njit(cache=True)
    def _hash_insert(table: np.ndarray, keys: np.ndarray, counts: np.ndarray, num_nodes: np.int64) -> np.int64:
        mask = np.uint64(table.shape[0] - 1)
        inserted = np.int64(0)
        for i in range(keys.shape[0]):
            key = np.int64(i) * num_nodes + keys[i]
            slot = (np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)) & mask
            while True:
                cur = table[slot]
                if cur == key:
                    break
                if cur == -1:
                    table[slot] = key
                    counts[i] += 1
                    inserted += 1
                    break
                slot = (slot + np.uint64(1)) & mask
        return inserted

    @numba.njit(cache=True)
    def _hash_rehash(old: np.ndarray, new: np.ndarray) -> None:
        mask = np.uint64(new.shape[0] - 1)
        for i in range(old.shape[0]):
            key = old[i]
            if key == -1:
                continue
            slot = (np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)) & mask
            while new[slot] != -1:
                slot = (slot + np.uint64(1)) & mask
            new[slot] = key


class HashVisitedTracker:
    """Open-addressing hash of walker*num_nodes+node keys."""

    def __init__(self, num_walkers: int, num_nodes: int) -> None:
        self.num_nodes = num_nodes
        self.counts = np.zeros(num_walkers, dtype=np.int64)
        cap = 1 << max(12, (4 * num_walkers - 1).bit_length())
        self._table = np.full(cap, -1, dtype=np.int64)
        self._size = 0

    def add(self, nodes: np.ndarray) -> None:
        if (self._size + nodes.shape[0]) * 3 > 2 * self._table.shape[0]:
            grown = np.full(self._table.shape[0] * 2, -1, dtype=np.int64)
            _hash_rehash(self._table, grown)
            self._table = grown
        self._size += int(
            _hash_insert(self._table, np.ascontiguousarray(nodes, dtype=np.int64),
                         self.counts, np.int64(self.num_nodes))
        )

    def visited_sets(self) -> list[set[int]]:
        sets: list[set[int]] = [set() for _ in range(self.counts.shape[0])]
        for key in self._table[self._table != -1].tolist():
            sets[key // self.num_nodes].add(key % self.num_nodes)
        return sets


def make_tracker(num_walkers: int, num_nodes: int):
    if numba is not None and num_walkers > _HASH_THRESHOLD:
        return HashVisitedTracker(num_walkers, num_nodes)
    return SetVisitedTracker(num_walkers, num_nodes)
