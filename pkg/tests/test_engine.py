import json
import math

import numpy as np
import pytest

from semgraph.algorithms import SSSP, WCC, PageRank, UpdateError, VertexProgram
from semgraph.cache import CacheConfig
from semgraph.engine import Engine, EngineConfig, process_shard, run
from semgraph.graph import DegreeInfo, GraphMeta, VertexInterval
from semgraph.store import Shard, ShardStore, write_metadata, write_shard


@pytest.fixture
def singleton(tmp_path):
    iv = VertexInterval(0, 1, 0)
    write_shard(Shard(0, iv, np.zeros(2, dtype=np.int64), np.zeros(0, dtype=np.int64)), tmp_path)
    write_metadata(GraphMeta(1, 0, [iv]), DegreeInfo([0], [0]), [0.0], tmp_path)
    return ShardStore(tmp_path)


@pytest.mark.parametrize(
    "program,expected", [(PageRank(), 0.15), (SSSP(0), 0.0), (WCC(), 0.0)]
)
def test_singleton_converges_quickly(singleton, program, expected):
    r = run(singleton, program)
    assert r.iterations <= 2 and r.converged
    assert r.values.tolist() == [expected]


def identity(v, in_neighbors, src_values, degrees):
    return src_values[v], False


def test_identity_update_stops_after_first_pass(gen_store):
    _, store = gen_store("powerlaw", 256, 1024, seed=3, target=100)
    init = np.random.default_rng(0).random(store.meta.vertex_count)
    r = Engine(store).run(identity, init)
    assert r.iterations == 1
    assert r.reports[0].shards_loaded == store.meta.shard_count
    assert np.array_equal(r.values, init)


def test_process_shard_empty_pagerank():
    shard = Shard(2, VertexInterval(4, 6, 0), np.zeros(3, dtype=np.int64), np.zeros(0, dtype=np.int64))
    src = np.full(7, 1 / 7)
    dst = np.zeros(7)
    active = process_shard(shard, src, dst, PageRank(), DegreeInfo([0] * 7, [0] * 7))
    assert dst[4:6].tolist() == [0.15 / 7, 0.15 / 7]
    assert dst[:4].tolist() == [0, 0, 0, 0]
    assert active.tolist() == [4, 5]


def test_process_shard_no_changes():
    shard = Shard(0, VertexInterval(0, 2, 1), np.array([0, 0, 1]), np.array([0]))
    src = np.array([0.0, 1.0])
    active = process_shard(shard, src, np.zeros(2), SSSP(0), None)
    assert active.tolist() == []


def test_workers_write_disjoint_slices(gen_store):
    _, store = gen_store("powerlaw", 1024, 8192, seed=8, target=500)
    seq = Engine(store, EngineConfig(max_iterations=5)).run(PageRank())
    par = Engine(store, EngineConfig(max_iterations=5, worker_count=4, debug=True)).run(PageRank())
    assert np.array_equal(seq.values, par.values)


def test_reports_account_for_every_shard(gen_store):
    _, store = gen_store("line", 300, target=12, symmetrize=True)
    r = Engine(store, EngineConfig(max_iterations=400)).run(SSSP(0))
    p = store.meta.shard_count
    for rep in r.reports:
        assert rep.shards_loaded + rep.shards_skipped == p
        assert rep.vertex_bytes_written == 0
    assert r.values.tolist() == list(range(300))
    assert r.iterations == 300


def test_skipped_shards_carry_values_forward(gen_store):
    _, store = gen_store("line", 1000, target=50, symmetrize=True)
    on = Engine(store, EngineConfig(max_iterations=2000)).run(SSSP(0))
    off_cfg = EngineConfig(max_iterations=2000, selective_scheduling=False, cache_config=CacheConfig(math.inf))
    off = Engine(store, off_cfg).run(SSSP(0))
    assert np.array_equal(on.values, off.values)
    assert sum(r.shards_skipped for r in on.reports) > 0
    assert all(r.shards_skipped == 0 for r in off.reports)


def test_threshold_one_skips_from_the_start(gen_store):
    _, store = gen_store("line", 200, target=10, symmetrize=True)
    cfg = EngineConfig(max_iterations=500, activation_threshold=1.0)
    r = Engine(store, cfg).run(SSSP(0))
    assert r.reports[0].shards_loaded == store.meta.shard_count  # all ids active: every filter hits
    assert r.reports[5].shards_loaded < store.meta.shard_count
    assert r.values.tolist() == list(range(200))


class Boom(VertexProgram):
    def init_values(self, n):
        return np.zeros(n)

    def update(self, v, in_neighbors, src_values, degrees):
        if v == 7:
            raise ZeroDivisionError("bad vertex")
        return 0.0, False


def test_update_fault_has_context(gen_store):
    _, store = gen_store("line", 20, target=3)
    with pytest.raises(UpdateError, match="vertex 7") as err:
        Engine(store).run(Boom())
    assert err.value.shard_id == store.meta.shard_of(7)


def test_missing_shard_file_propagates(gen_store):
    _, store = gen_store("line", 20, target=3)
    store.shard_path(1).unlink()
    with pytest.raises(FileNotFoundError):
        Engine(store, EngineConfig(selective_scheduling=False)).run(PageRank())


def test_float_tolerance_shortens_pagerank(gen_store):
    _, store = gen_store("cycle", 100, target=20)
    exact = Engine(store, EngineConfig(max_iterations=50)).run(PageRank())
    loose = Engine(store, EngineConfig(max_iterations=50, float_tolerance=1e-6)).run(PageRank())
    assert loose.iterations <= exact.iterations


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(worker_count=0)
    with pytest.raises(ValueError):
        EngineConfig(activation_threshold=1.5)


def test_init_length_checked(gen_store):
    _, store = gen_store("line", 10, target=3)
    with pytest.raises(ValueError):
        Engine(store).run(PageRank(), np.zeros(3))


def test_report_json_fields(gen_store):
    _, store = gen_store("line", 10, target=3)
    lines = []
    Engine(store).run(SSSP(0), on_iteration=lambda r: lines.append(r.to_json()))
    rec = json.loads(lines[0])
    assert set(rec) == {"iter", "active_ratio", "shards_loaded", "shards_skipped", "wall_ms", "bytes_read"}
    assert rec["iter"] == 0


def test_budget_zero_reads_every_shard_every_iteration(gen_store):
    _, store = gen_store("powerlaw", 1024, 8192, seed=5, target=600)
    cfg = EngineConfig(max_iterations=4, selective_scheduling=False, cache_config=CacheConfig(0, 1))
    r = Engine(store, cfg).run(PageRank())
    assert all(rep.bytes_read == store.total_shard_bytes() for rep in r.reports)


def test_unreachable_vertices_stay_infinite(gen_store):
    _, store = gen_store("star", 5, target=2)
    assert Engine(store).run(SSSP(1)).values.tolist() == [1, 0, math.inf, math.inf, math.inf]
