import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from semgraph.gen import GenSpec, generate  # noqa: E402
from semgraph.preprocess import EdgeListSource, ShardingPolicy, preprocess  # noqa: E402
from semgraph.store import ShardStore  # noqa: E402

ACCEPTANCE_RESULTS = []


def write_edges(path, edges):
    path = Path(path)
    path.write_text("".join(f"{u} {v}\n" for u, v in edges))
    return EdgeListSource(path, "text")


@pytest.fixture
def make_store(tmp_path):
    """Build a graph directory from an edge list and open it."""
    counter = iter(range(10**6))

    def make(edges, target=2, symmetrize=False, **kw):
        i = next(counter)
        src = write_edges(tmp_path / f"edges{i}.txt", edges)
        preprocess(src, tmp_path / f"g{i}", ShardingPolicy(target), symmetrize=symmetrize, **kw)
        return ShardStore(tmp_path / f"g{i}")

    return make


@pytest.fixture
def gen_store(tmp_path):
    def make(kind, n, e=0, seed=0, target=64, symmetrize=False):
        src = generate(GenSpec(kind, n, e, seed), tmp_path / f"{kind}-{n}-{e}-{seed}.txt")
        out = tmp_path / f"{kind}-{n}-{e}-{seed}-{target}-{int(symmetrize)}"
        preprocess(src, out, ShardingPolicy(target), symmetrize=symmetrize)
        return src, ShardStore(out)

    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
