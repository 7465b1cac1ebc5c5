"""Byte-exact output for the committed line(5) fixture."""

import hashlib
import struct
from pathlib import Path

import pytest

from semgraph.cli import main

FIXTURE = Path(__file__).parent / "fixtures" / "line5.txt"


def u64(*xs):
    return struct.pack(f"<{len(xs)}Q", *xs)


def f64(*xs):
    return struct.pack(f"<{len(xs)}d", *xs)


# hand-assembled from the documented layout: edges 0->1->2->3->4, two edges per shard
EXPECTED = {
    "property.bin": u64(5, 4, 2) + u64(0, 3, 2) + u64(3, 5, 2),
    "vertices.bin": f64(0, 0, 0, 0, 0) + u64(0, 1, 1, 1, 1) + u64(1, 1, 1, 1, 0),
    "shard_0.bin": b"SEMGRAPH" + struct.pack("<II", 1, 0) + u64(0, 3, 2) + u64(0, 0, 1, 2) + u64(0, 1),
    "shard_1.bin": b"SEMGRAPH" + struct.pack("<II", 1, 1) + u64(3, 5, 2) + u64(0, 1, 2) + u64(2, 3),
}

GOLDEN_SHA256 = {
    "property.bin": "163f4249c34d03cac4f1ec49c6d0736d112c0aa250116a706d354d6cd29d2912",
    "shard_0.bin": "b9e440da4c05969d69bec449f3a081c576236b43006a52f1bd5b555e6ff057dd",
    "shard_1.bin": "2d3520633b212cf2de7f4e07d37f762b17b2bb2f764c6855d78144b101d7dcd4",
    "vertices.bin": "299f782b775f4355cae822411b32de084c6021f9ca53fe103a3d4d8fea243a0a",
}


def build(out):
    assert main(["preprocess", str(FIXTURE), str(out), "--edges-per-shard", "2"]) == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_matches_hand_assembled_bytes(tmp_path):
    assert build(tmp_path / "g") == EXPECTED


def test_golden_hashes(tmp_path):
    files = build(tmp_path / "g")
    assert {k: hashlib.sha256(v).hexdigest() for k, v in files.items()} == GOLDEN_SHA256


@pytest.mark.parametrize("workers", ["1", "3"])
def test_stable_across_runs(tmp_path, workers):
    first = build(tmp_path / "a")
    assert main(["preprocess", str(FIXTURE), str(tmp_path / "b"), "--edges-per-shard", "2", "--workers", workers]) == 0
    assert first == {p.name: p.read_bytes() for p in sorted((tmp_path / "b").iterdir())}
