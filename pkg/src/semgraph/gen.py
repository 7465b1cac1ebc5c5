"""Deterministic synthetic graphs for testing."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from semgraph.preprocess import EdgeListSource
from semgraph.store import atomic_write

KINDS = ("powerlaw", "uniform", "line", "cycle", "star", "complete")
RMAT_SKEW = (0.57, 0.19, 0.19, 0.05)
MAX_VERTICES = 1 << 31
MAX_EDGES = 1 << 28


@dataclass(frozen=True)
class GenSpec:
    kind: str
    vertex_count: int
    edge_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not 1 <= self.vertex_count <= MAX_VERTICES:
            raise ValueError(f"vertex count must be in [1, {MAX_VERTICES}]")
        if self.kind in ("powerlaw", "uniform") and not 1 <= self.edge_count <= MAX_EDGES:
            raise ValueError(f"{self.kind} needs an edge count in [1, {MAX_EDGES}]")
        if self.kind == "complete" and self.vertex_count > 1 << 12:
            raise ValueError("complete graphs are limited to 4096 vertices")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")


def _rmat(n, m, rng, skew=RMAT_SKEW):
    scale = max(1, int(np.ceil(np.log2(n))))
    probs = np.cumsum(skew)
    src = np.empty(0, dtype=np.int64)
    dst = np.empty(0, dtype=np.int64)
    while len(src) < m:
        need = m - len(src)
        s = np.zeros(need, dtype=np.int64)
        d = np.zeros(need, dtype=np.int64)
        for _ in range(scale):
            q = np.searchsorted(probs, rng.random(need), side="right")
            s = (s << 1) | (q >> 1)
            d = (d << 1) | (q & 1)
        keep = (s < n) & (d < n)
        src = np.concatenate([src, s[keep]])
        dst = np.concatenate([dst, d[keep]])
    return src[:m], dst[:m]


def edges(spec: GenSpec) -> tuple[np.ndarray, np.ndarray]:
    n = spec.vertex_count
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "powerlaw":
        return _rmat(n, spec.edge_count, rng)
    if spec.kind == "uniform":
        return rng.integers(0, n, spec.edge_count), rng.integers(0, n, spec.edge_count)
    if spec.kind == "line":
        return np.arange(n - 1), np.arange(1, n)
    if spec.kind == "cycle":
        return np.arange(n), (np.arange(n) + 1) % n
    if spec.kind == "star":
        return np.arange(1, n), np.zeros(n - 1, dtype=np.int64)
    # complete: every ordered pair without self-loops
    s, d = np.divmod(np.arange(n * n), n)
    keep = s != d
    return s[keep], d[keep]


def generate(spec: GenSpec, out) -> EdgeListSource:
    """Write the graph as a text edge list and return it as an input source."""
    src, dst = edges(spec)
    header = f"# {spec.kind} n={spec.vertex_count} e={len(src)} seed={spec.seed}\n"
    body = "".join(f"{s} {d}\n" for s, d in zip(src.tolist(), dst.tolist()))
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    atomic_write(out, [header.encode(), body.encode()])
    return EdgeListSource(out, "text")
