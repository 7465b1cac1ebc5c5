import numpy as np
import pytest

from oracles import read_edge_list
from semgraph.gen import GenSpec, edges, generate


def pairs(spec):
    s, d = edges(spec)
    return list(zip(s.tolist(), d.tolist()))


def test_line():
    assert pairs(GenSpec("line", 5)) == [(0, 1), (1, 2), (2, 3), (3, 4)]


def test_star():
    assert pairs(GenSpec("star", 4)) == [(1, 0), (2, 0), (3, 0)]


def test_cycle_and_complete():
    assert pairs(GenSpec("cycle", 3)) == [(0, 1), (1, 2), (2, 0)]
    assert sorted(pairs(GenSpec("complete", 3))) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]


def test_powerlaw_is_deterministic(tmp_path):
    spec = GenSpec("powerlaw", 2**14, 2**17, seed=42)
    a = generate(spec, tmp_path / "a.txt").path.read_bytes()
    b = generate(spec, tmp_path / "b.txt").path.read_bytes()
    assert a == b
    c = generate(GenSpec("powerlaw", 2**14, 2**17, seed=43), tmp_path / "c.txt").path.read_bytes()
    assert a != c


def test_powerlaw_is_skewed_and_in_range(tmp_path):
    n = 2**14
    src = generate(GenSpec("powerlaw", n, 2**17, seed=7), tmp_path / "p.txt")
    _, es = read_edge_list(src.path)
    arr = np.array(es)
    assert len(arr) == 2**17
    assert arr.min() >= 0 and arr.max() < n
    in_deg = np.bincount(arr[:, 1], minlength=n)
    assert in_deg.max() > 10 * in_deg.mean()


def test_non_power_of_two_powerlaw():
    s, d = edges(GenSpec("powerlaw", 1000, 5000, seed=1))
    assert len(s) == 5000 and max(s.max(), d.max()) < 1000


@pytest.mark.parametrize(
    "kw", [dict(kind="tree", vertex_count=4), dict(kind="line", vertex_count=0), dict(kind="uniform", vertex_count=4)]
)
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        GenSpec(**kw)
