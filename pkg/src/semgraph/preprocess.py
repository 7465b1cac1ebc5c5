"""Edge list -> destination-partitioned CSR shards.

Four passes: scan degrees, compute vertex intervals, bucket edges into per-shard
spill files, then convert each bucket to CSR and write the metadata files.
"""

from __future__ import annotations

import logging
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice
from pathlib import Path

import numpy as np

from semgraph.graph import DegreeInfo, GraphMeta, VertexInterval, validate_meta
from semgraph.store import (
    U64,
    Shard,
    shard_filename,
    write_idmap,
    write_metadata,
    write_shard,
)

log = logging.getLogger(__name__)

DEFAULT_EDGES_PER_SHARD = 1 << 20
DEFAULT_MAX_VERTICES = 1 << 32
CHUNK_EDGES = 1 << 18


class InputError(ValueError):
    """Malformed, empty, or out-of-range edge list input."""


@dataclass(frozen=True)
class EdgeListSource:
    path: Path
    format: str = "text"

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        if self.format not in ("text", "binary"):
            raise ValueError(f"unknown edge list format {self.format!r}")

    @classmethod
    def guess(cls, path) -> EdgeListSource:
        path = Path(path)
        return cls(path, "binary" if path.suffix in (".bin", ".edges64") else "text")


@dataclass(frozen=True)
class ShardingPolicy:
    target_edges_per_shard: int = DEFAULT_EDGES_PER_SHARD
    max_shard_count: int | None = None

    def __post_init__(self):
        if self.target_edges_per_shard < 1:
            raise ValueError("target_edges_per_shard must be >= 1")
        if self.max_shard_count is not None and self.max_shard_count < 1:
            raise ValueError("max_shard_count must be >= 1")


# -- reading ------------------------------------------------------------------------

def _parse_text_lines(lines, first_lineno):
    body = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    tokens = " ".join(body).split()
    if len(tokens) == 2 * len(body):
        try:
            arr = np.array([int(t) for t in tokens], dtype=np.uint64).reshape(-1, 2)
            return arr[:, 0], arr[:, 1]
        except (ValueError, OverflowError):
            pass
    # slow path, only to locate the offending line
    for i, ln in enumerate(lines, start=first_lineno):
        s = ln.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise InputError(f"line {i}: malformed edge {s!r}")
        if any(int(p) >= 1 << 64 for p in parts):
            raise InputError(f"line {i}: id overflow in {s!r}")
    raise InputError(f"lines {first_lineno}-{first_lineno + len(lines) - 1}: malformed input")


def _raw_chunks(source: EdgeListSource, chunk_edges=CHUNK_EDGES):
    if not source.path.exists():
        raise FileNotFoundError(f"input not found: {source.path}")
    if source.format == "binary":
        size = source.path.stat().st_size
        if size % 16:
            raise InputError(f"{source.path}: size {size} is not a multiple of 16 bytes")
        with open(source.path, "rb") as f:
            while True:
                arr = np.fromfile(f, dtype=U64, count=2 * chunk_edges)
                if not len(arr):
                    break
                arr = arr.reshape(-1, 2)
                yield arr[:, 0], arr[:, 1]
        return
    lineno = 1
    with open(source.path, "r", encoding="ascii", errors="replace") as f:
        while True:
            lines = list(islice(f, chunk_edges))
            if not lines:
                break
            src, dst = _parse_text_lines(lines, lineno)
            lineno += len(lines)
            if len(src):
                yield src, dst


def read_edges(source: EdgeListSource, symmetrize=False, idmap: np.ndarray | None = None, chunk_edges=CHUNK_EDGES):
    """Yield (src, dst) int64 chunks, optionally remapped to dense ids and mirrored."""
    for src, dst in _raw_chunks(source, chunk_edges):
        if idmap is not None:
            src = np.searchsorted(idmap, src)
            dst = np.searchsorted(idmap, dst)
        else:
            if len(src) and max(int(src.max()), int(dst.max())) >= 1 << 63:
                raise InputError(f"{source.path}: id overflow (>= 2^63); use remapping")
        src = src.astype(np.int64)
        dst = dst.astype(np.int64)
        if symmetrize:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        yield src, dst


def collect_ids(source: EdgeListSource) -> np.ndarray:
    """Sorted distinct vertex ids appearing in the input (the dense-id remap table)."""
    ids = np.empty(0, dtype=np.uint64)
    for src, dst in _raw_chunks(source):
        ids = np.union1d(ids, np.concatenate([src, dst]))
    if not len(ids):
        raise InputError(f"{source.path}: empty input")
    return ids


# -- step 1 -------------------------------------------------------------------------

def scan_degrees(source: EdgeListSource, symmetrize=False, idmap=None, max_vertices=DEFAULT_MAX_VERTICES):
    """Return (vertex_count, edge_count, DegreeInfo) after one pass over the input."""
    in_deg = np.zeros(0, dtype=np.int64)
    out_deg = np.zeros(0, dtype=np.int64)
    edges = 0
    for src, dst in read_edges(source, symmetrize, idmap):
        top = max(int(src.max()), int(dst.max())) + 1
        if top > max_vertices:
            raise InputError(f"{source.path}: id overflow, vertex id {top - 1} exceeds limit {max_vertices - 1}")
        if top > len(in_deg):
            in_deg = np.pad(in_deg, (0, top - len(in_deg)))
            out_deg = np.pad(out_deg, (0, top - len(out_deg)))
        in_deg += np.bincount(dst, minlength=len(in_deg))
        out_deg += np.bincount(src, minlength=len(out_deg))
        edges += len(src)
    if edges == 0:
        raise InputError(f"{source.path}: empty input")
    if idmap is not None and len(in_deg) < len(idmap):
        in_deg = np.pad(in_deg, (0, len(idmap) - len(in_deg)))
        out_deg = np.pad(out_deg, (0, len(idmap) - len(out_deg)))
    return len(in_deg), edges, DegreeInfo(in_deg, out_deg)


# -- step 2 -------------------------------------------------------------------------

def _greedy_intervals(in_degree: np.ndarray, target: int) -> list[VertexInterval]:
    n = len(in_degree)
    csum = np.cumsum(np.asarray(in_degree, dtype=np.int64))
    intervals = []
    lo = 0
    while lo < n:
        base = int(csum[lo - 1]) if lo else 0
        # first index whose running total reaches the target closes the interval
        hi = int(np.searchsorted(csum, base + target, side="left")) + 1
        hi = min(max(hi, lo + 1), n)
        intervals.append(VertexInterval(lo, hi, int(csum[hi - 1]) - base))
        lo = hi
    return intervals


def compute_intervals(degrees: DegreeInfo, policy: ShardingPolicy = ShardingPolicy()) -> list[VertexInterval]:
    """Greedy split over vertex ids, closing an interval once its in-degree reaches the target."""
    in_degree = degrees.in_degree if isinstance(degrees, DegreeInfo) else np.asarray(degrees)
    if not len(in_degree):
        raise ValueError("no vertices")
    target = policy.target_edges_per_shard
    intervals = _greedy_intervals(in_degree, target)
    cap = policy.max_shard_count
    if cap is not None:
        total = int(np.sum(in_degree, dtype=np.int64))
        target = max(target, -(-total // cap))
        while len(intervals) > cap:
            intervals = _greedy_intervals(in_degree, target)
            target += max(1, target // 8)
    return intervals


# -- step 3 -------------------------------------------------------------------------

def partition_edges(source, intervals, spill_dir, symmetrize=False, idmap=None) -> tuple[list[Path], list[int]]:
    """Append every edge to the spill file of the interval holding its destination."""
    spill_dir = Path(spill_dir)
    starts = np.array([iv.lo for iv in intervals], dtype=np.int64)
    n = intervals[-1].hi
    paths = [spill_dir / f"bucket_{k}.bin" for k in range(len(intervals))]
    counts = [0] * len(intervals)
    files = [open(p, "wb") for p in paths]
    try:
        for src, dst in read_edges(source, symmetrize, idmap):
            if len(dst) and (int(dst.max()) >= n or int(src.max()) >= n):
                raise InputError(f"edge endpoint out of range [0, {n})")
            bucket = np.searchsorted(starts, dst, side="right") - 1
            order = np.argsort(bucket, kind="stable")
            pairs = np.stack([src[order], dst[order]], axis=1).astype(U64)
            bounds = np.searchsorted(bucket[order], np.arange(len(intervals) + 1))
            for k in np.flatnonzero(np.diff(bounds)):
                chunk = pairs[bounds[k]:bounds[k + 1]]
                files[k].write(chunk.tobytes())
                counts[k] += len(chunk)
    finally:
        for f in files:
            f.close()
    return paths, counts


# -- step 4 -------------------------------------------------------------------------

def build_shard_csr(shard_id: int, interval: VertexInterval, src, dst) -> Shard:
    """Group a bucket's edges by destination; sources ascending within each vertex."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if len(dst) and (dst.min() < interval.lo or dst.max() >= interval.hi):
        raise InputError(f"bucket {shard_id} holds an edge outside [{interval.lo}, {interval.hi})")
    order = np.lexsort((src, dst))
    counts = np.bincount(dst - interval.lo, minlength=interval.size)
    row = np.zeros(interval.size + 1, dtype=np.int64)
    np.cumsum(counts, out=row[1:])
    iv = VertexInterval(interval.lo, interval.hi, len(src))
    return Shard(shard_id, iv, row, src[order])


def build_shards(buckets, intervals, degrees: DegreeInfo, out_dir, workers=1, values=None) -> GraphMeta:
    out_dir = Path(out_dir)

    def convert(k):
        pairs = np.fromfile(buckets[k], dtype=U64).reshape(-1, 2).astype(np.int64)
        shard = build_shard_csr(k, intervals[k], pairs[:, 0], pairs[:, 1])
        write_shard(shard, out_dir)
        return shard.interval

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            built = list(pool.map(convert, range(len(buckets))))
    else:
        built = [convert(k) for k in range(len(buckets))]
    meta = GraphMeta(degrees.vertex_count, degrees.edge_count, built)
    validate_meta(meta)
    if values is None:
        values = np.zeros(meta.vertex_count)
    write_metadata(meta, degrees, values, out_dir)
    return meta


def preprocess(
    source: EdgeListSource,
    out_dir,
    policy: ShardingPolicy = ShardingPolicy(),
    symmetrize=False,
    remap=False,
    workers=1,
    max_vertices=DEFAULT_MAX_VERTICES,
) -> GraphMeta:
    """Run the whole pipeline; returns the metadata of the written graph directory."""
    if isinstance(source, (str, Path)):
        source = EdgeListSource.guess(source)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    idmap = collect_ids(source) if remap else None
    n, m, degrees = scan_degrees(source, symmetrize, idmap, max_vertices)
    intervals = compute_intervals(degrees, policy)
    log.info("scanned %d vertices, %d edges -> %d shards", n, m, len(intervals))
    spill = Path(tempfile.mkdtemp(prefix=".spill-", dir=out_dir))
    try:
        buckets, _ = partition_edges(source, intervals, spill, symmetrize, idmap)
        meta = build_shards(buckets, intervals, degrees, out_dir, workers)
    finally:
        shutil.rmtree(spill, ignore_errors=True)
    for stale in out_dir.glob("shard_*.bin"):
        k = stale.stem.split("_", 1)[1]
        if not k.isdigit() or int(k) >= meta.shard_count:
            stale.unlink()
    idmap_path = out_dir / "idmap.bin"
    if idmap is not None:
        write_idmap(idmap, out_dir)
    elif idmap_path.exists():
        idmap_path.unlink()
    assert all((out_dir / shard_filename(k)).exists() for k in range(meta.shard_count))
    return meta
