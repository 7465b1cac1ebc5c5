import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semgraph.algorithms import PageRank
from semgraph.cache import CacheConfig
from semgraph.costmodel import MODELS, CostInputs, compare_all, evaluate, predict_vs_measured, vsp_delta
from semgraph.engine import Engine, EngineConfig, IterationReport
from semgraph.store import HEADER_SIZE

mpmath.mp.dps = 40

EXAMPLE = CostInputs(C=8, D=8, V=100, E=1000, P=10, N=4, theta=1.0)


def hand_table(C, D, V, E, P, N, theta):
    """Table rows evaluated in 40-digit arithmetic."""
    C, D, V, E, P, N, theta = (mpmath.mpf(x) for x in (C, D, V, E, P, N, theta))
    delta = (1 - mpmath.exp(-(E / V) / P)) * P
    root = mpmath.sqrt(P)
    psw = C * V + 2 * (C + D) * E
    return {
        "psw": (psw, psw, psw / P),
        "esg": (C * V + (C + D) * E, C * V + C * E, C * V / P),
        "vsp": (C * (1 + delta) * V + D * E, C * V, C * (2 + delta) * V / P),
        "dsw": (C * root * V + D * E, C * root * V, 2 * C * V / root),
        "vsw": (theta * D * E, mpmath.mpf(0), 2 * C * V + N * D * E / P),
    }


def test_vsw_example():
    r = evaluate("vsw", EXAMPLE)
    assert (r.read_bytes, r.write_bytes, r.memory_bytes) == (8000, 0, 4800)


def test_vsw_fully_cached():
    r = evaluate("vsw", CostInputs(8, 8, 100, 1000, 10, 4, theta=0.0))
    assert r.read_bytes == 0 and r.write_bytes == 0


def test_vsp_delta_example():
    assert vsp_delta(10, 10) == pytest.approx(6.3212, abs=5e-5)
    assert vsp_delta(10, 10) == pytest.approx(float((1 - mpmath.exp(-1)) * 10), rel=1e-15)


@pytest.mark.parametrize(
    "inputs",
    [
        EXAMPLE,
        CostInputs(8, 8, 100, 1000, 10, 4, 0.25),
        CostInputs(4, 12, 41_652_230, 1_468_365_182, 70, 24, 0.3),
        CostInputs(8, 4, 7, 3, 1, 1, 0.0),
    ],
)
def test_matches_high_precision_table(inputs):
    expected = hand_table(inputs.C, inputs.D, inputs.V, inputs.E, inputs.P, inputs.N, inputs.theta)
    for r in compare_all(inputs):
        for got, want in zip((r.read_bytes, r.write_bytes, r.memory_bytes), expected[r.model]):
            if want == 0:
                assert got == 0
            else:
                assert abs(got - float(want)) / float(want) < 5e-15


def test_model_order_and_psw_symmetry():
    reports = compare_all(EXAMPLE)
    assert [r.model for r in reports] == list(MODELS)
    psw = reports[0]
    assert psw.read_bytes == psw.write_bytes


inputs_strategy = st.builds(
    CostInputs,
    C=st.integers(1, 64),
    D=st.integers(1, 64),
    V=st.integers(1, 10**9),
    E=st.integers(1, 10**10),
    P=st.integers(1, 10**4),
    N=st.integers(1, 256),
    theta=st.floats(0, 1),
)


@given(inputs_strategy)
def test_orderings(x):
    reports = {r.model: r for r in compare_all(x)}
    if x.theta < 1:
        assert reports["vsw"].read_bytes < reports["esg"].read_bytes
    assert all(reports["vsw"].write_bytes <= r.write_bytes for r in reports.values())
    assert all(v >= 0 for r in reports.values() for v in (r.read_bytes, r.write_bytes, r.memory_bytes))
    assert compare_all(x) == compare_all(x)


@given(inputs_strategy)
def test_vsw_memory_monotone(x):
    base = evaluate("vsw", x).memory_bytes
    more_workers = CostInputs(x.C, x.D, x.V, x.E, x.P, x.N + 1, x.theta)
    more_shards = CostInputs(x.C, x.D, x.V, x.E, x.P + 1, x.N, x.theta)
    assert evaluate("vsw", more_workers).memory_bytes > base
    assert evaluate("vsw", more_shards).memory_bytes < base


def test_delta_limits():
    assert vsp_delta(5.0, 1e9) == pytest.approx(5.0, rel=1e-6)
    assert vsp_delta(1e6, 10) == pytest.approx(10.0, rel=1e-12)


@pytest.mark.parametrize("bad", [dict(V=0), dict(P=-1), dict(theta=1.5), dict(C=0)])
def test_invalid_inputs(bad):
    kw = dict(C=8, D=8, V=10, E=10, P=2, N=1, theta=0.5) | bad
    with pytest.raises(ValueError):
        CostInputs(**kw)


def test_unknown_model():
    with pytest.raises(ValueError):
        evaluate("gas", EXAMPLE)


def report(i, b):
    return IterationReport(i, 1.0, 1, 0, 0.0, b)


def test_predict_warm_cache():
    s = predict_vs_measured(CostInputs(8, 8, 10, 10, 2, 1, 0.0), [report(0, 500), report(1, 0), report(2, 0)])
    assert s.measured_bytes == 0 and s.predicted_edge_bytes == 0 and s.deviation_bytes == 0


def test_predict_requires_reports():
    with pytest.raises(ValueError):
        predict_vs_measured(EXAMPLE, [])


def test_predict_budget_zero_overhead(gen_store):
    _, store = gen_store("powerlaw", 1024, 8192, seed=3, target=700)
    meta = store.meta
    cfg = EngineConfig(max_iterations=3, selective_scheduling=False, cache_config=CacheConfig(0))
    r = Engine(store, cfg).run(PageRank())
    x = CostInputs(8, 8, meta.vertex_count, meta.edge_count, meta.shard_count, 1, 1.0)
    s = predict_vs_measured(x, r.reports, meta)
    overhead = HEADER_SIZE * meta.shard_count + 8 * (meta.vertex_count + meta.shard_count)
    assert s.measured_bytes == store.total_shard_bytes()
    assert s.deviation_bytes == overhead == s.overhead_bytes
    assert s.relative_deviation == 0.0
    assert s.measured_theta == 1.0
    assert math.isfinite(s.relative_deviation)
