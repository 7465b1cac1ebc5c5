"""Selective scheduling: per-shard Bloom filters over edge sources."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_BITS_PER_ELEMENT = 10
DEFAULT_THRESHOLD = 1 / 1000
MIN_BITS = 64

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SALT = np.uint64(0xD6E8FEB86659FD93)


def mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class HashedIds:
    """Vertex ids with their two base hashes precomputed, for probing many filters."""

    SMALL = 64

    def __init__(self, ids):
        self.ids = np.atleast_1d(np.asarray(ids, dtype=np.uint64))
        self.h1 = mix64(self.ids)
        self.h2 = mix64(self.ids ^ _SALT) | np.uint64(1)
        self.pairs = list(zip(self.h1.tolist(), self.h2.tolist())) if len(self.ids) <= self.SMALL else None

    def __len__(self):
        return len(self.ids)


_MASK64 = (1 << 64) - 1


class ShardBloomFilter:
    """Bloom filter with double hashing ``h1 + i*h2 mod m`` over mixed vertex ids."""

    def __init__(self, element_count: int, bits_per_element: float = DEFAULT_BITS_PER_ELEMENT):
        self.element_count = element_count
        self.m = max(MIN_BITS, math.ceil(bits_per_element * element_count))
        k = round(self.m / element_count * math.log(2)) if element_count else 1
        self.hash_count = min(16, max(1, k))
        self.bit_array = np.zeros((self.m + 7) // 8, dtype=np.uint8)
        self._bytes = None

    @classmethod
    def from_sources(cls, col, bits_per_element=DEFAULT_BITS_PER_ELEMENT) -> ShardBloomFilter:
        distinct = np.unique(np.asarray(col, dtype=np.uint64))
        bf = cls(len(distinct), bits_per_element)
        bf.add(distinct)
        return bf

    def _positions(self, h1, h2) -> np.ndarray:
        i = np.arange(self.hash_count, dtype=np.uint64)[:, None]
        return (h1 + i * h2) % np.uint64(self.m)

    def add(self, ids) -> None:
        hashed = ids if isinstance(ids, HashedIds) else HashedIds(ids)
        pos = self._positions(hashed.h1, hashed.h2).ravel()
        np.bitwise_or.at(self.bit_array, pos >> np.uint64(3), (1 << (pos & np.uint64(7))).astype(np.uint8))
        self._bytes = None

    def _contains_hashed(self, h1, h2) -> np.ndarray:
        pos = self._positions(h1, h2)
        bits = (self.bit_array[pos >> np.uint64(3)] >> (pos & np.uint64(7)).astype(np.uint8)) & 1
        return bits.all(axis=0).astype(bool)

    def contains(self, ids) -> np.ndarray:
        """Membership per id: False is definite, True may be a false positive."""
        hashed = ids if isinstance(ids, HashedIds) else HashedIds(ids)
        return self._contains_hashed(hashed.h1, hashed.h2)

    def has_any(self, ids, chunk=4096) -> bool:
        """True as soon as any id (possibly) hits; stops at the first hit."""
        hashed = ids if isinstance(ids, HashedIds) else HashedIds(ids)
        if hashed.pairs is not None:
            if self._bytes is None:
                self._bytes = self.bit_array.tobytes()
            bits, m = self._bytes, self.m
            for h1, h2 in hashed.pairs:
                for i in range(self.hash_count):
                    p = ((h1 + i * h2) & _MASK64) % m
                    if not bits[p >> 3] >> (p & 7) & 1:
                        break
                else:
                    return True
            return False
        for start in range(0, len(hashed), chunk):
            if self._contains_hashed(hashed.h1[start:start + chunk], hashed.h2[start:start + chunk]).any():
                return True
        return False

    def __contains__(self, v) -> bool:
        return bool(self.contains([v])[0])

    def expected_fpr(self) -> float:
        if not self.element_count:
            return 0.0
        k, n, m = self.hash_count, self.element_count, self.m
        return (1 - math.exp(-k * n / m)) ** k


def build_filters(store, bits_per_element=DEFAULT_BITS_PER_ELEMENT) -> list[ShardBloomFilter]:
    """One filter per shard, holding exactly the distinct source ids of its edges."""
    return [
        ShardBloomFilter.from_sources(store.read_shard(k).col, bits_per_element)
        for k in range(store.meta.shard_count)
    ]


LOAD, SKIP = "load", "skip"


@dataclass(frozen=True)
class ScheduleDecision:
    shard_id: int
    action: str
    reason: str

    def __post_init__(self):
        if self.action == SKIP and self.reason != "filter-miss":
            raise ValueError("a skip must come from a filter miss")


def decide(shard_id, filters, active_vertices, active_ratio, selective=True, threshold=DEFAULT_THRESHOLD):
    if not selective or filters is None:
        return ScheduleDecision(shard_id, LOAD, "scheduling-off")
    if active_ratio > threshold:
        return ScheduleDecision(shard_id, LOAD, "ratio-above-threshold")
    if filters[shard_id].has_any(active_vertices):
        return ScheduleDecision(shard_id, LOAD, "filter-hit")
    return ScheduleDecision(shard_id, SKIP, "filter-miss")
