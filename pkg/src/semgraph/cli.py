"""Command-line entry point: ``semgraph {gen,preprocess,run,stats,costmodel}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from semgraph import costmodel
from semgraph.algorithms import ALGORITHMS, UpdateError, make_program
from semgraph.cache import CacheConfig, parse_budget
from semgraph.engine import DEFAULT_MAX_ITERATIONS, Engine, EngineConfig, default_workers
from semgraph.gen import KINDS, GenSpec, generate
from semgraph.graph import MetaError
from semgraph.preprocess import (
    DEFAULT_EDGES_PER_SHARD,
    EdgeListSource,
    InputError,
    ShardingPolicy,
    preprocess,
)
from semgraph.scheduler import DEFAULT_THRESHOLD
from semgraph.store import ShardStore, StoreError, shard_file_size, write_values

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("semgraph")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    graph_dir: Path
    algo: str
    workers: int
    max_iterations: int
    activation_threshold: float
    selective: bool
    cache_mode: int
    cache_budget: float
    source: int
    values_out: Path | None
    reports_out: Path | None

    def validate(self):
        if not self.graph_dir.is_dir():
            raise UsageError(f"graph directory not found: {self.graph_dir}")
        for out in (self.values_out, self.reports_out):
            if out is not None and not out.parent.is_dir():
                raise UsageError(f"output directory not found: {out.parent}")


# -- commands -----------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GenSpec(args.kind, args.n, args.e, args.seed)
    src = generate(spec, args.out)
    print(f"wrote {spec.kind} graph to {src.path}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    path = Path(args.input)
    if not path.exists():
        print(f"input not found: {path}", file=sys.stderr)
        return EXIT_DATA
    source = EdgeListSource(path, args.format) if args.format else EdgeListSource.guess(path)
    policy = ShardingPolicy(args.edges_per_shard, args.max_shards)
    meta = preprocess(
        source, args.out_dir, policy, symmetrize=args.symmetrize, remap=args.remap, workers=args.workers
    )
    total = sum(f.stat().st_size for f in Path(args.out_dir).iterdir() if f.is_file())
    print(f"vertices {meta.vertex_count}  edges {meta.edge_count}  shards {meta.shard_count}")
    print(f"{'shard':>6} {'lo':>12} {'hi':>12} {'edges':>12}")
    for k, iv in enumerate(meta.intervals):
        print(f"{k:>6} {iv.lo:>12} {iv.hi:>12} {iv.edge_count:>12}")
    print(f"total bytes {total}")
    return EXIT_OK


def cmd_run(args) -> int:
    manifest = RunManifest(
        graph_dir=Path(args.graph_dir),
        algo=args.algo,
        workers=args.workers,
        max_iterations=args.max_iterations,
        activation_threshold=args.activation_threshold,
        selective=not args.no_selective,
        cache_mode=args.cache_mode,
        cache_budget=args.cache_budget,
        source=args.source,
        values_out=Path(args.out) if args.out else None,
        reports_out=Path(args.reports) if args.reports else None,
    )
    manifest.validate()
    store = ShardStore(manifest.graph_dir)
    config = EngineConfig(
        worker_count=manifest.workers,
        max_iterations=manifest.max_iterations,
        selective_scheduling=manifest.selective,
        activation_threshold=manifest.activation_threshold,
        cache_config=CacheConfig(manifest.cache_budget, manifest.cache_mode),
    )
    try:
        program = make_program(manifest.algo, manifest.source)
        init = program.init_values(store.meta.vertex_count)
    except ValueError as e:
        raise UsageError(str(e)) from None

    report_file = open(manifest.reports_out, "w") if manifest.reports_out else sys.stdout
    t0 = time.perf_counter()
    try:
        def emit(report):
            report_file.write(report.to_json() + "\n")
            report_file.flush()

        result = Engine(store, config).run(program, init, on_iteration=emit)
    finally:
        if report_file is not sys.stdout:
            report_file.close()
    wall = time.perf_counter() - t0
    if manifest.values_out is not None:
        write_values(result.values, manifest.values_out)
    counters = store.counters.snapshot()
    print(
        f"{manifest.algo}: {result.iterations} iterations, converged={result.converged}, wall {wall:.3f}s, "
        + " ".join(f"{k}={v}" for k, v in counters.items()),
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    store = ShardStore(args.graph_dir)
    meta, deg = store.meta, store.degrees
    in_deg = deg.in_degree.astype(np.int64)
    out_deg = deg.out_degree.astype(np.int64)
    print(f"vertices {meta.vertex_count}")
    print(f"edges {meta.edge_count}")
    print(f"shards {meta.shard_count}")
    print(f"max in-degree {in_deg.max()}  mean in-degree {in_deg.mean():.4f}")
    print(f"max out-degree {out_deg.max()}  mean out-degree {out_deg.mean():.4f}")
    print(f"{'shard':>6} {'lo':>12} {'hi':>12} {'edges':>12} {'bytes':>12}")
    for k, iv in enumerate(meta.intervals):
        print(f"{k:>6} {iv.lo:>12} {iv.hi:>12} {iv.edge_count:>12} {shard_file_size(iv):>12}")
    print(f"shard edges total {sum(iv.edge_count for iv in meta.intervals)}")
    # in-degree histogram in power-of-two buckets: 0, 1, 2-3, 4-7, ...
    buckets = np.where(in_deg > 0, np.floor(np.log2(np.maximum(in_deg, 1))).astype(np.int64) + 1, 0)
    print("in-degree histogram")
    for b, count in enumerate(np.bincount(buckets)):
        if count:
            label = "0" if b == 0 else f"{1 << (b - 1)}-{(1 << b) - 1}"
            print(f"  {label:>15} {count}")
    return EXIT_OK


def cmd_costmodel(args) -> int:
    try:
        inputs = costmodel.CostInputs(args.C, args.D, args.V, args.E, args.P, args.N, args.theta)
    except ValueError as e:
        raise UsageError(str(e)) from None
    reports = costmodel.compare_all(inputs)
    if args.json:
        print(json.dumps({"inputs": asdict(inputs), "models": [r.as_dict() for r in reports]}, indent=2))
    else:
        print(costmodel.format_table(reports))
    return EXIT_OK


# -- parsing ------------------------------------------------------------------------

def _budget(text):
    try:
        return parse_budget(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semgraph", description="Semi-external-memory graph analytics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic edge list")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True, help="vertex count")
    g.add_argument("--e", type=int, default=0, help="edge count (powerlaw, uniform)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    pp = sub.add_parser("preprocess", help="shard an edge list into a graph directory")
    pp.add_argument("input")
    pp.add_argument("out_dir")
    pp.add_argument("--format", choices=("text", "binary"))
    pp.add_argument("--edges-per-shard", type=int, default=DEFAULT_EDGES_PER_SHARD)
    pp.add_argument("--max-shards", type=int)
    pp.add_argument("--symmetrize", action="store_true", help="add (v,u) for every edge (u,v)")
    pp.add_argument("--remap", action="store_true", help="compact arbitrary ids to dense ids")
    pp.add_argument("--workers", type=int, default=1)
    pp.set_defaults(func=cmd_preprocess)

    r = sub.add_parser("run", help="run an algorithm over a graph directory")
    r.add_argument("graph_dir")
    r.add_argument("--algo", choices=sorted(ALGORITHMS), required=True)
    r.add_argument("--source", type=int, default=0, help="SSSP source vertex")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--max-iterations", type=int, default=DEFAULT_MAX_ITERATIONS)
    r.add_argument("--no-selective", action="store_true", help="disable selective scheduling")
    r.add_argument("--activation-threshold", type=float, default=DEFAULT_THRESHOLD)
    r.add_argument("--cache-mode", type=int, choices=(1, 2, 3, 4), default=1)
    r.add_argument("--cache-budget", type=_budget, default=0, help="bytes, e.g. 0, 64M, 2G, inf")
    r.add_argument("--out", help="final vertex values (f64 little-endian)")
    r.add_argument("--reports", help="JSON-lines iteration reports (default: stdout)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("stats", help="summarize a graph directory")
    s.add_argument("graph_dir")
    s.set_defaults(func=cmd_stats)

    c = sub.add_parser("costmodel", help="per-iteration I/O and memory of five computation models")
    c.add_argument("--C", type=float, default=8, help="bytes per vertex value")
    c.add_argument("--D", type=float, default=8, help="bytes per edge")
    c.add_argument("--V", type=int, required=True)
    c.add_argument("--E", type=int, required=True)
    c.add_argument("--P", type=int, required=True)
    c.add_argument("--N", type=int, default=1)
    c.add_argument("--theta", type=float, default=1.0)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_costmodel)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "workers", 0) is None:
        args.workers = default_workers()
    if getattr(args, "workers", 1) < 1:
        print("semgraph: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"semgraph: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"semgraph: {e}", file=sys.stderr)
        return EXIT_DATA
    except (InputError, StoreError, MetaError, UpdateError, OSError, ValueError) as e:
        print(f"semgraph: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"semgraph: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
