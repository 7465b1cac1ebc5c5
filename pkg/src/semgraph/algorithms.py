"""PageRank, SSSP and WCC as vertex programs.

Each algorithm comes in two forms that must agree: a per-vertex ``*_update``
function matching the engine's update contract, and a ``VertexProgram`` that
evaluates the same rule for a whole shard with numpy.
"""

from __future__ import annotations

import math

import numpy as np

from semgraph.graph import DegreeInfo

DAMPING = 0.85
BASE = 0.15


class UpdateError(RuntimeError):
    """An update rule raised; carries the shard and (when known) vertex."""

    def __init__(self, shard_id, vertex, cause):
        where = f"shard {shard_id}" + (f", vertex {vertex}" if vertex is not None else "")
        super().__init__(f"update failed in {where}: {cause!r}")
        self.shard_id = shard_id
        self.vertex = vertex


class VertexProgram:
    """Update rule applied by the engine to every vertex of a loaded shard.

    Subclasses override ``update`` (one vertex) and may override ``update_shard``
    for speed. ``update_shard`` returns the new values for the interval and a
    changed mask, or ``None`` to let the engine compare against the old values.
    """

    name = "custom"

    def init_values(self, vertex_count: int) -> np.ndarray:
        raise NotImplementedError

    def update(self, v, in_neighbors, src_values, degrees):
        raise NotImplementedError

    def update_shard(self, shard, src_values, degrees):
        lo, hi = shard.interval.lo, shard.interval.hi
        out = np.empty(hi - lo)
        changed = np.zeros(hi - lo, dtype=bool)
        for v in range(lo, hi):
            try:
                out[v - lo], changed[v - lo] = self.update(v, shard.in_neighbors(v), src_values, degrees)
            except Exception as e:
                raise UpdateError(shard.shard_id, v, e) from e
        return out, changed


class FunctionProgram(VertexProgram):
    """Wraps a plain ``update(v, in_neighbors, src_values, degrees) -> (value, changed)`` callable."""

    def __init__(self, fn, init=None, name=None):
        self.fn = fn
        self._init = init
        self.name = name or getattr(fn, "__name__", "custom")

    def init_values(self, vertex_count):
        if self._init is None:
            raise ValueError(f"{self.name}: no initial values supplied")
        return np.asarray(self._init(vertex_count) if callable(self._init) else self._init, dtype=np.float64)

    def update(self, v, in_neighbors, src_values, degrees):
        return self.fn(v, in_neighbors, src_values, degrees)


def _segment_reduce(ufunc, contrib, row, empty):
    """Apply ``ufunc.reduceat`` over CSR segments, filling empty segments with ``empty``."""
    counts = np.diff(row)
    out = np.full(len(counts), empty, dtype=np.float64)
    nonempty = counts > 0
    if nonempty.any():
        out[nonempty] = ufunc.reduceat(contrib, row[:-1][nonempty])
    return out


# -- PageRank ------------------------------------------------------------------------

def pagerank_update(v, in_neighbors, src_values, degrees: DegreeInfo):
    num_vertex = len(src_values)
    s = 0.0
    for u in in_neighbors:
        s += src_values[u] / degrees.out_degree[u]
    value = BASE / num_vertex + DAMPING * s
    return value, value != src_values[v]


class PageRank(VertexProgram):
    name = "pagerank"

    def init_values(self, vertex_count):
        return np.full(vertex_count, 1.0 / vertex_count)

    def update(self, v, in_neighbors, src_values, degrees):
        return pagerank_update(v, in_neighbors, src_values, degrees)

    def update_shard(self, shard, src_values, degrees):
        col = shard.col
        contrib = src_values[col] / degrees.out_degree[col]
        s = _segment_reduce(np.add, contrib, shard.row, 0.0)
        return BASE / len(src_values) + DAMPING * s, None


# -- SSSP ----------------------------------------------------------------------------

def sssp_update(v, in_neighbors, src_values, degrees=None):
    d = math.inf
    for u in in_neighbors:
        d = min(src_values[u] + 1.0, d)
    value = min(d, src_values[v])
    return value, value != src_values[v]


class SSSP(VertexProgram):
    """Unit-weight shortest paths from ``source``; unreachable vertices stay at +inf."""

    name = "sssp"

    def __init__(self, source: int = 0):
        if source < 0:
            raise ValueError("source vertex must be non-negative")
        self.source = source

    def init_values(self, vertex_count):
        if self.source >= vertex_count:
            raise ValueError(f"source vertex {self.source} not in [0, {vertex_count})")
        values = np.full(vertex_count, math.inf)
        values[self.source] = 0.0
        return values

    def update(self, v, in_neighbors, src_values, degrees):
        return sssp_update(v, in_neighbors, src_values, degrees)

    def update_shard(self, shard, src_values, degrees):
        lo, hi = shard.interval.lo, shard.interval.hi
        d = _segment_reduce(np.minimum, src_values[shard.col] + 1.0, shard.row, math.inf)
        return np.minimum(d, src_values[lo:hi]), None


# -- WCC -----------------------------------------------------------------------------

def wcc_update(v, in_neighbors, src_values, degrees=None):
    group = math.inf
    for u in in_neighbors:
        group = min(src_values[u], group)
    value = min(group, src_values[v])
    return value, value != src_values[v]


class WCC(VertexProgram):
    """Min-label propagation over in-edges; equals weak components on symmetric edge sets."""

    name = "wcc"

    def init_values(self, vertex_count):
        return np.arange(vertex_count, dtype=np.float64)

    def update(self, v, in_neighbors, src_values, degrees):
        return wcc_update(v, in_neighbors, src_values, degrees)

    def update_shard(self, shard, src_values, degrees):
        lo, hi = shard.interval.lo, shard.interval.hi
        group = _segment_reduce(np.minimum, src_values[shard.col], shard.row, math.inf)
        return np.minimum(group, src_values[lo:hi]), None


ALGORITHMS = {"pagerank": PageRank, "sssp": SSSP, "wcc": WCC}


def make_program(name: str, source: int = 0) -> VertexProgram:
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return cls(source) if cls is SSSP else cls()
