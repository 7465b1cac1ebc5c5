"""On-disk shard and metadata formats, and an I/O-counting reader.

Directory layout::

    <dir>/property.bin    u64 vertex_count, edge_count, shard_count, then (lo, hi, edge_count) per shard
    <dir>/vertices.bin    f64 values[|V|], u64 in_degree[|V|], u64 out_degree[|V|]
    <dir>/shard_<k>.bin   40-byte header, u64 row[hi-lo+1], u64 col[edge_count]
    <dir>/idmap.bin       u64 original id per dense id (only when ids were remapped)

Shard header: magic "SEMGRAPH", u32 version, u32 shard_id, u64 lo, u64 hi, u64 edge_count.
Everything is little-endian.
"""

from __future__ import annotations

import os
import struct
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from semgraph.graph import DegreeInfo, GraphMeta, MetaError, VertexInterval, validate_meta

MAGIC = b"SEMGRAPH"
VERSION = 1
HEADER = struct.Struct("<8sIIQQQ")
HEADER_SIZE = HEADER.size
assert HEADER_SIZE == 40

U64 = np.dtype("<u8")
F64 = np.dtype("<f8")

PROPERTY_FILE = "property.bin"
VERTEX_FILE = "vertices.bin"
IDMAP_FILE = "idmap.bin"


class StoreError(Exception):
    pass


class BadMagic(StoreError):
    pass


class Truncated(StoreError):
    pass


class CorruptShard(StoreError):
    pass


def shard_filename(k: int) -> str:
    return f"shard_{k}.bin"


def shard_file_size(interval: VertexInterval) -> int:
    return HEADER_SIZE + 8 * (interval.size + 1) + 8 * interval.edge_count


def shard_overhead_bytes(interval: VertexInterval) -> int:
    """Bytes of a shard file that are not edge records (header plus row array)."""
    return HEADER_SIZE + 8 * (interval.size + 1)


@dataclass(eq=False)
class Shard:
    """In-edges of one vertex interval in CSR form."""

    shard_id: int
    interval: VertexInterval
    row: np.ndarray
    col: np.ndarray

    def in_neighbors(self, v: int) -> np.ndarray:
        i = v - self.interval.lo
        return self.col[self.row[i]:self.row[i + 1]]

    def check(self, vertex_count: int | None = None) -> None:
        iv = self.interval
        if len(self.row) != iv.size + 1:
            raise CorruptShard(f"shard {self.shard_id}: row has {len(self.row)} entries, expected {iv.size + 1}")
        if len(self.col) != iv.edge_count:
            raise CorruptShard(f"shard {self.shard_id}: col has {len(self.col)} entries, expected {iv.edge_count}")
        if self.row[0] != 0 or self.row[-1] != len(self.col):
            raise CorruptShard(f"shard {self.shard_id}: row does not span col")
        if len(self.row) > 1 and np.any(self.row[1:] < self.row[:-1]):
            raise CorruptShard(f"shard {self.shard_id}: row is not non-decreasing")
        if vertex_count is not None and len(self.col) and int(self.col.max()) >= vertex_count:
            raise CorruptShard(f"shard {self.shard_id}: source id out of range")

    def __eq__(self, other):
        if not isinstance(other, Shard):
            return NotImplemented
        return (
            self.shard_id == other.shard_id
            and self.interval == other.interval
            and np.array_equal(self.row, other.row)
            and np.array_equal(self.col, other.col)
        )


class IoCounters:
    """Byte and event counters shared by the store and the edge cache.

    Increments take a lock so totals equal the serial sum under concurrent workers.
    """

    FIELDS = ("shard_bytes_read", "shard_loads", "vertex_bytes_written", "cache_hits", "cache_misses")

    def __init__(self):
        self._lock = threading.Lock()
        self.shard_bytes_read = 0
        self.shard_loads = 0
        self.vertex_bytes_written = 0
        self.cache_hits = 0
        self.cache_misses = 0

    def add(self, **deltas) -> None:
        with self._lock:
            for name, delta in deltas.items():
                if delta < 0:
                    raise ValueError(f"counter {name} cannot decrease")
                setattr(self, name, getattr(self, name) + delta)

    def snapshot(self) -> dict:
        with self._lock:
            return {name: getattr(self, name) for name in self.FIELDS}

    def __repr__(self):
        return f"IoCounters({self.snapshot()})"


def atomic_write(path: Path, chunks) -> int:
    """Write ``chunks`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    written = 0
    try:
        os.fchmod(fd, 0o644)
        with os.fdopen(fd, "wb") as f:
            for chunk in chunks:
                f.write(chunk)
                written += len(chunk)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return written


# -- shards -------------------------------------------------------------------------

def encode_payload(shard: Shard) -> bytes:
    """Shard file bytes after the header: row then col, u64 LE."""
    return np.ascontiguousarray(shard.row, dtype=U64).tobytes() + np.ascontiguousarray(shard.col, dtype=U64).tobytes()


def decode_payload(shard_id: int, interval: VertexInterval, payload, vertex_count=None, validate=True) -> Shard:
    n_row = interval.size + 1
    expected = 8 * (n_row + interval.edge_count)
    if len(payload) < expected:
        raise Truncated(f"shard {shard_id}: payload has {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise CorruptShard(f"shard {shard_id}: {len(payload) - expected} trailing bytes")
    arr = np.frombuffer(payload, dtype=U64)
    row = arr[:n_row].astype(np.int64)
    col = arr[n_row:].astype(np.int64)
    shard = Shard(shard_id, interval, row, col)
    if validate:
        shard.check(vertex_count)
    return shard


def write_shard(shard: Shard, directory) -> Path:
    shard.check()
    iv = shard.interval
    path = Path(directory) / shard_filename(shard.shard_id)
    header = HEADER.pack(MAGIC, VERSION, shard.shard_id, iv.lo, iv.hi, iv.edge_count)
    atomic_write(path, [header, encode_payload(shard)])
    return path


def parse_header(raw: bytes, path=None) -> tuple[int, VertexInterval]:
    if len(raw) < HEADER_SIZE:
        raise Truncated(f"{path}: file shorter than header")
    magic, version, shard_id, lo, hi, edge_count = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise StoreError(f"{path}: unsupported version {version}")
    try:
        interval = VertexInterval(lo, hi, edge_count)
    except MetaError as e:
        raise CorruptShard(f"{path}: {e}") from None
    return shard_id, interval


def read_shard(path, counters: IoCounters | None = None, vertex_count=None) -> Shard:
    raw = Path(path).read_bytes()
    if counters is not None:
        counters.add(shard_bytes_read=len(raw), shard_loads=1)
    shard_id, interval = parse_header(raw, path)
    return decode_payload(shard_id, interval, memoryview(raw)[HEADER_SIZE:], vertex_count)


# -- metadata -----------------------------------------------------------------------

def encode_property(meta: GraphMeta) -> bytes:
    recs = [meta.vertex_count, meta.edge_count, meta.shard_count]
    for iv in meta.intervals:
        recs.extend((iv.lo, iv.hi, iv.edge_count))
    return np.asarray(recs, dtype=U64).tobytes()


def write_metadata(meta: GraphMeta, degrees: DegreeInfo, values, directory, counters: IoCounters | None = None):
    validate_meta(meta)
    values = np.asarray(values, dtype=F64)
    n = meta.vertex_count
    if len(values) != n or degrees.vertex_count != n:
        raise ValueError(
            f"array lengths ({len(values)} values, {degrees.vertex_count} degrees) do not match |V|={n}"
        )
    if degrees.edge_count != meta.edge_count:
        raise ValueError("degree totals do not match edge_count")
    directory = Path(directory)
    atomic_write(directory / PROPERTY_FILE, [encode_property(meta)])
    written = atomic_write(
        directory / VERTEX_FILE,
        [values.tobytes(), degrees.in_degree.astype(U64).tobytes(), degrees.out_degree.astype(U64).tobytes()],
    )
    if counters is not None:
        counters.add(vertex_bytes_written=written)
    return directory / PROPERTY_FILE, directory / VERTEX_FILE


def read_property(directory) -> GraphMeta:
    path = Path(directory) / PROPERTY_FILE
    if not path.exists():
        raise StoreError(f"{path}: property file not found")
    raw = path.read_bytes()
    if len(raw) < 24 or len(raw) % 8:
        raise Truncated(f"{path}: {len(raw)} bytes is not a valid property file")
    arr = np.frombuffer(raw, dtype=U64)
    n, m, p = (int(x) for x in arr[:3])
    if len(arr) != 3 + 3 * p:
        raise Truncated(f"{path}: expected {p} interval records")
    try:
        intervals = [VertexInterval(int(lo), int(hi), int(c)) for lo, hi, c in arr[3:].reshape(-1, 3)]
        meta = GraphMeta(n, m, intervals)
        validate_meta(meta)
    except MetaError as e:
        raise StoreError(f"{path}: {e}") from None
    return meta


def read_metadata(directory) -> tuple[GraphMeta, DegreeInfo, np.ndarray]:
    meta = read_property(directory)
    path = Path(directory) / VERTEX_FILE
    if not path.exists():
        raise StoreError(f"{path}: vertex file not found")
    raw = path.read_bytes()
    n = meta.vertex_count
    if len(raw) != 24 * n:
        raise Truncated(f"{path}: {len(raw)} bytes, expected {24 * n}")
    values = np.frombuffer(raw, dtype=F64, count=n).copy()
    in_deg = np.frombuffer(raw, dtype=U64, count=n, offset=8 * n).copy()
    out_deg = np.frombuffer(raw, dtype=U64, count=n, offset=16 * n).copy()
    try:
        degrees = DegreeInfo(in_deg, out_deg)
    except ValueError as e:
        raise StoreError(f"{path}: {e}") from None
    if degrees.edge_count != meta.edge_count:
        raise StoreError(f"{path}: degree totals disagree with property file")
    return meta, degrees, values


def write_values(values, path, counters: IoCounters | None = None) -> Path:
    written = atomic_write(Path(path), [np.asarray(values, dtype=F64).tobytes()])
    if counters is not None:
        counters.add(vertex_bytes_written=written)
    return Path(path)


def read_values(path) -> np.ndarray:
    return np.fromfile(path, dtype=F64)


def write_idmap(original_ids, directory) -> Path:
    path = Path(directory) / IDMAP_FILE
    atomic_write(path, [np.asarray(original_ids, dtype=U64).tobytes()])
    return path


def read_idmap(directory) -> np.ndarray | None:
    path = Path(directory) / IDMAP_FILE
    return np.fromfile(path, dtype=U64) if path.exists() else None


class ShardStore:
    """A preprocessed graph directory: metadata in memory, shards read on demand."""

    def __init__(self, directory, counters: IoCounters | None = None):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise StoreError(f"{self.directory}: not a directory")
        self.meta, self.degrees, self.values = read_metadata(self.directory)
        self.counters = counters if counters is not None else IoCounters()
        self._paths = [self.directory / shard_filename(k) for k in range(self.meta.shard_count)]

    def shard_path(self, k: int) -> Path:
        return self._paths[k]

    def shard_file_size(self, k: int) -> int:
        return shard_file_size(self.meta.intervals[k])

    def total_shard_bytes(self) -> int:
        return sum(shard_file_size(iv) for iv in self.meta.intervals)

    def read_raw(self, k: int) -> bytes:
        """Whole shard file, counted; the header is validated against the property file."""
        path = self.shard_path(k)
        raw = path.read_bytes()
        self.counters.add(shard_bytes_read=len(raw), shard_loads=1)
        shard_id, interval = parse_header(raw, path)
        if shard_id != k or interval != self.meta.intervals[k]:
            raise CorruptShard(f"{path}: header disagrees with property file")
        return raw

    def read_shard(self, k: int) -> Shard:
        raw = self.read_raw(k)
        return decode_payload(k, self.meta.intervals[k], memoryview(raw)[HEADER_SIZE:], self.meta.vertex_count)

    def decode(self, k: int, payload, validate=True) -> Shard:
        return decode_payload(k, self.meta.intervals[k], payload, self.meta.vertex_count, validate)
