"""Per-iteration I/O and memory cost of five out-of-core computation models.

All quantities are bytes. ``C`` is the size of a vertex value, ``D`` the size of
one edge record, ``P`` the number of shards or blocks, ``N`` the worker count and
``theta`` the edge-cache miss ratio.

    model  read                     write                 memory
    psw    C|V| + 2(C+D)|E|         C|V| + 2(C+D)|E|      (C|V| + 2(C+D)|E|) / P
    esg    C|V| + (C+D)|E|          C|V| + C|E|           C|V| / P
    vsp    C(1+delta)|V| + D|E|     C|V|                  C(2+delta)|V| / P
    dsw    C sqrt(P)|V| + D|E|      C sqrt(P)|V|          2C|V| / sqrt(P)
    vsw    theta D|E|               0                     2C|V| + N D|E| / P

with ``delta = (1 - exp(-d_avg / P)) P`` and ``d_avg = |E| / |V|``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from semgraph.store import shard_file_size, shard_overhead_bytes

MODELS = ("psw", "esg", "vsp", "dsw", "vsw")


@dataclass(frozen=True)
class CostInputs:
    C: float = 8
    D: float = 8
    V: int = 1
    E: int = 1
    P: int = 1
    N: int = 1
    theta: float = 1.0

    def __post_init__(self):
        for name in ("C", "D", "V", "E", "P", "N"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [0, 1], got {self.theta}")

    @property
    def d_avg(self) -> float:
        return self.E / self.V


@dataclass(frozen=True)
class CostReport:
    model: str
    read_bytes: float
    write_bytes: float
    memory_bytes: float

    def as_dict(self):
        return asdict(self)


def vsp_delta(d_avg: float, P: float) -> float:
    return (1.0 - math.exp(-d_avg / P)) * P


def evaluate(model: str, x: CostInputs) -> CostReport:
    C, D, V, E, P, N = x.C, x.D, x.V, x.E, x.P, x.N
    if model == "psw":
        io = C * V + 2 * (C + D) * E
        return CostReport(model, io, io, io / P)
    if model == "esg":
        return CostReport(model, C * V + (C + D) * E, C * V + C * E, C * V / P)
    if model == "vsp":
        delta = vsp_delta(x.d_avg, P)
        return CostReport(model, C * (1 + delta) * V + D * E, C * V, C * (2 + delta) * V / P)
    if model == "dsw":
        root = math.sqrt(P)
        return CostReport(model, C * root * V + D * E, C * root * V, 2 * C * V / root)
    if model == "vsw":
        return CostReport(model, x.theta * D * E, 0.0, 2 * C * V + N * D * E / P)
    raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")


def compare_all(x: CostInputs) -> list[CostReport]:
    return [evaluate(m, x) for m in MODELS]


def format_table(reports) -> str:
    head = f"{'model':<6} {'read_bytes':>20} {'write_bytes':>20} {'memory_bytes':>20}"
    lines = [head, "-" * len(head)]
    for r in reports:
        lines.append(f"{r.model:<6} {r.read_bytes:>20.6g} {r.write_bytes:>20.6g} {r.memory_bytes:>20.6g}")
    return "\n".join(lines)


@dataclass(frozen=True)
class PredictionSummary:
    measured_bytes: float
    predicted_edge_bytes: float
    overhead_bytes: float
    deviation_bytes: float
    relative_deviation: float
    measured_theta: float | None
    iterations: int

    def as_dict(self):
        return asdict(self)


def predict_vs_measured(inputs: CostInputs, reports, meta=None, skip_first=True) -> PredictionSummary:
    """Compare the VSW read prediction with measured steady-state shard reads.

    ``reports`` are the engine's iteration reports from a run with scheduling
    off. The first iteration warms the cache and is excluded unless it is the
    only one. Row arrays and headers are not edge records, so when ``meta`` is
    given their size is reported as ``overhead_bytes``, scaled by theta.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no iteration reports to compare against")
    steady = reports[1:] if skip_first and len(reports) > 1 else reports
    measured = sum(r.bytes_read for r in steady) / len(steady)
    predicted = evaluate("vsw", inputs).read_bytes
    overhead = 0.0
    measured_theta = None
    if meta is not None:
        full_overhead = sum(shard_overhead_bytes(iv) for iv in meta.intervals)
        overhead = inputs.theta * full_overhead
        measured_theta = measured / sum(shard_file_size(iv) for iv in meta.intervals)
    deviation = measured - predicted
    base = predicted + overhead
    relative = (measured - base) / base if base else (0.0 if measured == 0 else math.inf)
    return PredictionSummary(measured, predicted, overhead, deviation, relative, measured_theta, len(steady))
