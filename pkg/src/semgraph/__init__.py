"""Semi-external-memory graph analytics: vertices in memory, edges in CSR shards on disk."""

from semgraph.algorithms import SSSP, WCC, PageRank, VertexProgram, make_program
from semgraph.cache import CacheConfig, ShardCache
from semgraph.engine import Engine, EngineConfig, IterationReport, RunResult, run
from semgraph.graph import DegreeInfo, GraphMeta, VertexInterval, validate_meta
from semgraph.preprocess import EdgeListSource, ShardingPolicy, preprocess
from semgraph.store import IoCounters, Shard, ShardStore

__version__ = "0.1.0"

__all__ = [
    "CacheConfig",
    "DegreeInfo",
    "EdgeListSource",
    "Engine",
    "EngineConfig",
    "GraphMeta",
    "IoCounters",
    "IterationReport",
    "PageRank",
    "RunResult",
    "SSSP",
    "Shard",
    "ShardCache",
    "ShardStore",
    "ShardingPolicy",
    "VertexInterval",
    "VertexProgram",
    "WCC",
    "make_program",
    "preprocess",
    "run",
    "validate_meta",
]
