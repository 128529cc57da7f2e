from __future__ import annotations

import numpy as np
import pytest

from stratlab import RngStream, sample_gnp


def test_same_identity_replays_identical_sequence():
    a = RngStream(42).child("trial", 7).generator()
    b = RngStream(42).child("trial", 7).generator()
    assert np.array_equal(a.random(100), b.random(100))


def test_generator_restarts_at_stream_origin():
    s = RngStream(42).child("x")
    first = s.generator().random(10)
    again = s.generator().random(10)
    assert np.array_equal(first, again)


def test_distinct_paths_differ():
    base = RngStream(42)
    draws = {
        path: tuple(base.child(*path).generator().random(4).tolist())
        for path in [("a",), ("b",), ("a", 0), ("a", 1), (0, "a"), (1,), (2,)]
    }
    assert len(set(draws.values())) == len(draws)


def test_distinct_master_seeds_differ():
    x = RngStream(1).child("t").generator().random(8)
    y = RngStream(2).child("t").generator().random(8)
    assert not np.array_equal(x, y)


def test_child_extends_path():
    s = RngStream(5).child("n", 64).child("trial", 3)
    assert s.path == ("n", 64, "trial", 3)
    assert s.master_seed == 5


def test_label_types_rejected():
    with pytest.raises(TypeError):
        RngStream(0).child(1.5).generator()


def test_stream_independence_edge_count_correlation():
    # Pairs of streams with different trial labels should be uncorrelated:
    # |Pearson r| < 0.1 over 1000 pairs of G(64, 0.3) edge counts.
    base = RngStream(2024)
    xs, ys = [], []
    for t in range(1000):
        xs.append(sample_gnp(64, 0.3, base.child("trial", t)).edge_count())
        ys.append(sample_gnp(64, 0.3, base.child("trial", 1000 + t)).edge_count())
    r = np.corrcoef(xs, ys)[0, 1]
    assert abs(r) < 0.1
