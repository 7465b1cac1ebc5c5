"""Vertex-centric sliding-window execution.

Each iteration slides over the shards in id order. A worker loads a shard
(through the edge cache), computes new values for the shard's vertex interval
from the read-only source array, and writes them into its private slice of the
destination array. Intervals are disjoint, so no locking is needed on the
vertex arrays; the end of the iteration is the only barrier.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from semgraph.algorithms import FunctionProgram, UpdateError, VertexProgram
from semgraph.cache import CacheConfig, ShardCache, get_or_load
from semgraph.graph import VertexState
from semgraph.scheduler import DEFAULT_THRESHOLD, SKIP, HashedIds, build_filters, decide

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 200


@dataclass
class EngineConfig:
    worker_count: int = 1
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    selective_scheduling: bool = True
    activation_threshold: float = DEFAULT_THRESHOLD
    cache_config: CacheConfig = field(default_factory=CacheConfig)
    float_tolerance: float = 0.0
    debug: bool = False

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not 0.0 <= self.activation_threshold <= 1.0:
            raise ValueError("activation_threshold must be in [0, 1]")
        if self.float_tolerance < 0:
            raise ValueError("float_tolerance must be >= 0")


@dataclass
class IterationReport:
    iteration: int
    active_ratio: float
    shards_loaded: int
    shards_skipped: int
    wall_time: float
    bytes_read: int
    cache_hits: int = 0
    vertex_bytes_written: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "iter": self.iteration,
                "active_ratio": self.active_ratio,
                "shards_loaded": self.shards_loaded,
                "shards_skipped": self.shards_skipped,
                "wall_ms": round(self.wall_time * 1000, 3),
                "bytes_read": self.bytes_read,
            }
        )


@dataclass
class RunResult:
    values: np.ndarray
    reports: list[IterationReport]
    filters: list | None = None
    cache: ShardCache | None = None

    @property
    def iterations(self) -> int:
        return len(self.reports)

    @property
    def converged(self) -> bool:
        return bool(self.reports) and self.reports[-1].active_ratio == 0.0


def process_shard(shard, src_values, dst_values, program: VertexProgram, degrees, tolerance=0.0) -> np.ndarray:
    """Update every vertex of ``shard``'s interval into ``dst_values``; return the changed ids."""
    lo, hi = shard.interval.lo, shard.interval.hi
    try:
        new, changed = program.update_shard(shard, src_values, degrees)
    except UpdateError:
        raise
    except Exception as e:
        raise UpdateError(shard.shard_id, None, e) from e
    new = np.asarray(new, dtype=np.float64)
    if new.shape != (hi - lo,):
        raise UpdateError(shard.shard_id, None, ValueError(f"update returned shape {new.shape}"))
    if changed is None:
        old = src_values[lo:hi]
        changed = np.abs(new - old) > tolerance if tolerance else new != old
        if tolerance:
            # inf - inf is nan; identical infinities are unchanged
            changed &= ~(new == old)
    dst_values[lo:hi] = new
    return np.flatnonzero(changed) + lo


class Engine:
    def __init__(self, store, config: EngineConfig | None = None):
        self.store = store
        self.config = config or EngineConfig()
        self.cache = ShardCache(self.config.cache_config)
        self.filters = None

    def _prepare(self):
        if self.config.selective_scheduling and self.filters is None:
            self.filters = build_filters(self.store)

    def run(self, program, init_values=None, on_iteration=None) -> RunResult:
        if callable(program) and not isinstance(program, VertexProgram):
            program = FunctionProgram(program, init_values)
        meta, degrees, counters = self.store.meta, self.store.degrees, self.store.counters
        cfg = self.config
        if init_values is None:
            init_values = program.init_values(meta.vertex_count)
        init_values = np.asarray(init_values, dtype=np.float64)
        if init_values.shape != (meta.vertex_count,):
            raise ValueError(f"init_values has shape {init_values.shape}, expected ({meta.vertex_count},)")
        self._prepare()

        state = VertexState.initial(init_values)
        n, p = meta.vertex_count, meta.shard_count
        reports = []
        ratio = 1.0  # iteration 0 is a full pass
        pool = ThreadPoolExecutor(cfg.worker_count) if cfg.worker_count > 1 else None
        try:
            for it in range(cfg.max_iterations):
                if ratio == 0.0:
                    break
                t0 = time.perf_counter()
                before = counters.snapshot()
                written = np.zeros(n, dtype=np.int8) if cfg.debug else None

                src, dst, active = state.src_values, state.dst_values, state.active
                if self.filters is not None and ratio <= cfg.activation_threshold:
                    active = HashedIds(active)

                def work(k, src=src, dst=dst, active=active, ratio=ratio, written=written):
                    d = decide(k, self.filters, active, ratio, cfg.selective_scheduling, cfg.activation_threshold)
                    iv = meta.intervals[k]
                    if d.action == SKIP:
                        dst[iv.lo:iv.hi] = src[iv.lo:iv.hi]
                        return None
                    shard = get_or_load(k, self.store, self.cache, counters)
                    if written is not None:
                        written[iv.lo:iv.hi] += 1
                    return process_shard(shard, src, dst, program, degrees, cfg.float_tolerance)

                # executor.map hands shards out in id order as workers free up
                results = list(pool.map(work, range(p))) if pool else [work(k) for k in range(p)]

                if written is not None:
                    loaded = np.zeros(n, dtype=bool)
                    for k, r in enumerate(results):
                        if r is not None:
                            loaded[meta.intervals[k].lo:meta.intervals[k].hi] = True
                    assert np.all(written[loaded] == 1), "a vertex was written by more than one worker"
                    assert np.all(written[~loaded] == 0)

                lists = [r for r in results if r is not None and len(r)]
                new_active = np.concatenate(lists) if lists else np.empty(0, dtype=np.int64)
                state.swap(new_active)
                ratio = state.active_ratio
                after = counters.snapshot()
                loaded_count = sum(r is not None for r in results)
                report = IterationReport(
                    iteration=it,
                    active_ratio=ratio,
                    shards_loaded=loaded_count,
                    shards_skipped=p - loaded_count,
                    wall_time=time.perf_counter() - t0,
                    bytes_read=after["shard_bytes_read"] - before["shard_bytes_read"],
                    cache_hits=after["cache_hits"] - before["cache_hits"],
                    vertex_bytes_written=after["vertex_bytes_written"] - before["vertex_bytes_written"],
                )
                reports.append(report)
                log.debug("iteration %d: %s", it, report)
                if on_iteration is not None:
                    on_iteration(report)
        finally:
            if pool is not None:
                pool.shutdown()
        return RunResult(state.src_values.copy(), reports, self.filters, self.cache)


def run(store, program, init_values=None, config: EngineConfig | None = None, on_iteration=None) -> RunResult:
    return Engine(store, config).run(program, init_values, on_iteration)


def default_workers() -> int:
    env = os.environ.get("SEMGRAPH_WORKERS")
    if env:
        return max(1, int(env))
    return 1
