"""Budgeted in-memory shard cache with optional compression.

Modes: 1 stores raw payloads, 2 uses LZ4 frames, 3 and 4 use zlib at levels 1
and 3. Entries are admitted while they fit and never evicted.
"""

from __future__ import annotations

import logging
import math
import re
import threading
import zlib
from dataclasses import dataclass

import lz4.frame

from semgraph.store import HEADER_SIZE, IoCounters, Shard, StoreError

log = logging.getLogger(__name__)


class CacheIntegrityError(Exception):
    pass


def _lz4_compress(data):
    return lz4.frame.compress(data, content_checksum=True)


def _lz4_decompress(data):
    try:
        return lz4.frame.decompress(data)
    except RuntimeError as e:
        raise CacheIntegrityError(str(e)) from None


def _zlib_decompress(data):
    try:
        return zlib.decompress(data)
    except zlib.error as e:
        raise CacheIntegrityError(str(e)) from None


CODECS = {
    1: (bytes, bytes),
    2: (_lz4_compress, _lz4_decompress),
    3: (lambda b: zlib.compress(b, 1), _zlib_decompress),
    4: (lambda b: zlib.compress(b, 3), _zlib_decompress),
}


@dataclass(frozen=True)
class CacheConfig:
    budget_bytes: float = 0
    mode: int = 1

    def __post_init__(self):
        if self.mode not in CODECS:
            raise ValueError(f"cache mode must be 1-4, got {self.mode}")
        if self.budget_bytes < 0:
            raise ValueError("cache budget must be >= 0")


@dataclass
class CacheEntry:
    shard_id: int
    payload: bytes
    raw_bytes: int

    @property
    def stored_bytes(self) -> int:
        return len(self.payload)


_SUFFIXES = {"": 1, "k": 1 << 10, "m": 1 << 20, "g": 1 << 30, "t": 1 << 40}


def parse_budget(text: str) -> float:
    """'0', '4096', '64M', '1.5g', 'inf' -> bytes."""
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "unlimited"):
        return math.inf
    m = re.fullmatch(r"(\d+(?:\.\d+)?)\s*([kmgt]?)i?b?", s)
    if not m:
        raise ValueError(f"cannot parse cache budget {text!r}")
    return int(float(m.group(1)) * _SUFFIXES[m.group(2)])


class ShardCache:
    def __init__(self, config: CacheConfig = CacheConfig()):
        self.config = config
        self._compress, self._decompress = CODECS[config.mode]
        self._entries: dict[int, CacheEntry] = {}
        self._lock = threading.Lock()
        self.used_bytes = 0

    @property
    def remaining(self) -> float:
        return self.config.budget_bytes - self.used_bytes

    def __contains__(self, shard_id) -> bool:
        return shard_id in self._entries

    def __len__(self):
        return len(self._entries)

    def entry(self, shard_id) -> CacheEntry | None:
        return self._entries.get(shard_id)

    def admit(self, shard_id: int, raw_payload: bytes) -> bool:
        """Compress and store ``raw_payload`` if it fits in the remaining budget."""
        if self.config.budget_bytes <= 0:
            return False
        stored = self._compress(raw_payload)
        with self._lock:
            if shard_id in self._entries:
                return False
            if len(stored) > self.remaining:
                return False
            self._entries[shard_id] = CacheEntry(shard_id, stored, len(raw_payload))
            self.used_bytes += len(stored)
            assert self.used_bytes <= self.config.budget_bytes
        return True

    def lookup(self, shard_id: int) -> bytes | None:
        entry = self._entries.get(shard_id)
        if entry is None:
            return None
        return self._decompress(entry.payload)

    def drop(self, shard_id: int) -> None:
        with self._lock:
            entry = self._entries.pop(shard_id, None)
            if entry is not None:
                self.used_bytes -= entry.stored_bytes


def get_or_load(shard_id: int, store, cache: ShardCache | None, counters: IoCounters | None = None) -> Shard:
    """Serve a shard from the cache, falling back to the store and admitting on a miss."""
    counters = counters if counters is not None else store.counters
    if cache is not None:
        try:
            payload = cache.lookup(shard_id)
            if payload is not None:
                # admitted payloads were fully validated on the miss path
                shard = store.decode(shard_id, payload, validate=False)
                counters.add(cache_hits=1)
                return shard
        except (CacheIntegrityError, StoreError) as e:
            log.warning("dropping corrupt cache entry for shard %d: %s", shard_id, e)
            cache.drop(shard_id)
    counters.add(cache_misses=1)
    raw = store.read_raw(shard_id)
    payload = memoryview(raw)[HEADER_SIZE:]
    shard = store.decode(shard_id, payload)
    if cache is not None:
        cache.admit(shard_id, bytes(payload))
    return shard
