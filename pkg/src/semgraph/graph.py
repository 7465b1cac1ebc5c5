"""Core graph types shared by the preprocessor, the store and the engine."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np


class MetaError(ValueError):
    """Raised when a GraphMeta violates one of its invariants."""


@dataclass(frozen=True)
class VertexInterval:
    lo: int
    hi: int
    edge_count: int = 0

    def __post_init__(self):
        if self.lo < 0 or self.lo >= self.hi:
            raise MetaError(f"empty or negative interval [{self.lo}, {self.hi})")
        if self.edge_count < 0:
            raise MetaError(f"negative edge count on [{self.lo}, {self.hi})")

    @property
    def size(self) -> int:
        return self.hi - self.lo

    def __contains__(self, v) -> bool:
        return self.lo <= v < self.hi


@dataclass(frozen=True)
class GraphMeta:
    """Global properties of a preprocessed graph (the property file)."""

    vertex_count: int
    edge_count: int
    intervals: tuple[VertexInterval, ...]
    _starts: list[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        object.__setattr__(self, "_starts", [iv.lo for iv in self.intervals])

    @property
    def shard_count(self) -> int:
        return len(self.intervals)

    def shard_of(self, v: int) -> int:
        """Index of the interval containing vertex ``v`` (binary search)."""
        if not 0 <= v < self.vertex_count:
            raise IndexError(f"vertex {v} outside [0, {self.vertex_count})")
        return bisect.bisect_right(self._starts, v) - 1

    def shards_of(self, vertices: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self._starts, dtype=np.int64), vertices, side="right") - 1


def validate_meta(meta: GraphMeta) -> None:
    """Check every GraphMeta invariant; raise MetaError naming the first one violated."""
    if meta.vertex_count < 1:
        raise MetaError("vertex_count must be positive")
    if meta.edge_count < 0:
        raise MetaError("edge_count must be non-negative")
    if not meta.intervals:
        raise MetaError("count mismatch: no intervals")
    expected = 0
    for k, iv in enumerate(meta.intervals):
        if iv.lo > expected:
            raise MetaError(f"gap in coverage: [{expected}, {iv.lo}) before interval {k}")
        if iv.lo < expected:
            raise MetaError(f"overlapping intervals at interval {k} (lo={iv.lo} < {expected})")
        expected = iv.hi
    if expected != meta.vertex_count:
        kind = "gap in coverage" if expected < meta.vertex_count else "overlapping intervals"
        raise MetaError(f"{kind}: intervals end at {expected}, vertex_count is {meta.vertex_count}")
    total = sum(iv.edge_count for iv in meta.intervals)
    if total != meta.edge_count:
        raise MetaError(f"count mismatch: shard edges sum to {total}, edge_count is {meta.edge_count}")


@dataclass
class DegreeInfo:
    in_degree: np.ndarray
    out_degree: np.ndarray

    def __post_init__(self):
        self.in_degree = np.asarray(self.in_degree, dtype=np.uint64)
        self.out_degree = np.asarray(self.out_degree, dtype=np.uint64)
        if self.in_degree.shape != self.out_degree.shape:
            raise ValueError("in/out degree arrays differ in length")
        if int(self.in_degree.sum()) != int(self.out_degree.sum()):
            raise ValueError("in-degree and out-degree totals differ")

    @property
    def vertex_count(self) -> int:
        return len(self.in_degree)

    @property
    def edge_count(self) -> int:
        return int(self.in_degree.sum())


@dataclass
class VertexState:
    """Double-buffered vertex values plus the set of vertices active for the next pass."""

    src_values: np.ndarray
    dst_values: np.ndarray
    active: np.ndarray

    @classmethod
    def initial(cls, values) -> VertexState:
        src = np.array(values, dtype=np.float64)
        return cls(src, src.copy(), np.arange(len(src), dtype=np.int64))

    @property
    def active_ratio(self) -> float:
        return len(self.active) / len(self.src_values)

    def swap(self, active: np.ndarray) -> None:
        self.src_values, self.dst_values = self.dst_values, self.src_values
        self.active = active
