from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratlab import (
    AlphaPair,
    DeferredDigraph,
    DoubleDigraph,
    Graph,
    RngStream,
    edge_probability,
    open_deferred,
    reveal_out,
    sample_double_digraph,
    sample_gnp,
    sample_power_law_graph,
    wrap_eager,
)
from stratlab.sampler import (
    _uniform_distinct,
    structure_from_json_dict,
)

from conftest import stream


# ---------------------------------------------------------------------------
# AlphaPair and edge probabilities


def test_alpha_pair_accepts_valid_range():
    pair = AlphaPair(0.1, 0.2)
    assert pair.r1_exponent == pytest.approx(1.1)
    assert pair.r2_exponent == pytest.approx(0.8)
    assert pair.level_bound_exponent == pytest.approx(0.4)
    assert pair.mid_exponent == pytest.approx(0.15)


@pytest.mark.parametrize(
    "a1,a2",
    [(0.2, 0.1), (0.1, 0.1), (0.0, 0.2), (0.1, 0.25), (0.1, 0.3), (-0.1, 0.2)],
)
def test_alpha_pair_rejects_invalid(a1, a2):
    with pytest.raises(ValueError):
        AlphaPair(a1, a2)


def test_edge_probability_examples():
    pair = AlphaPair(0.1, 0.2)
    assert edge_probability(1024, pair, 2) == pytest.approx(0.00390625, rel=1e-12)
    assert edge_probability(16, pair, 1) == pytest.approx(2 ** -4.4, rel=1e-12)
    assert edge_probability(16, pair, 2) == pytest.approx(2 ** -3.2, rel=1e-12)


def test_edge_probability_rejects_bad_iota_and_n():
    pair = AlphaPair(0.1, 0.2)
    with pytest.raises(ValueError):
        edge_probability(16, pair, 3)
    with pytest.raises(ValueError):
        edge_probability(0, pair, 1)


# ---------------------------------------------------------------------------
# Uniform subset placement


def test_uniform_distinct_degenerate_and_complement():
    gen = np.random.default_rng(0)
    assert _uniform_distinct(10, 0, gen).size == 0
    assert sorted(_uniform_distinct(10, 10, gen).tolist()) == list(range(10))
    dense = _uniform_distinct(10, 9, gen)
    assert len(set(dense.tolist())) == 9
    sparse = _uniform_distinct(10**6, 100, gen)
    assert len(set(sparse.tolist())) == 100


def test_uniform_distinct_is_uniform_over_subsets():
    # Independent oracle: all C(5,2)=10 subsets equally likely.
    from scipy.stats import chisquare

    gen = np.random.default_rng(7)
    counts = {}
    samples = 20000
    for _ in range(samples):
        key = tuple(sorted(_uniform_distinct(5, 2, gen).tolist()))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 10
    stat, p = chisquare(list(counts.values()))
    assert p > 0.001


# ---------------------------------------------------------------------------
# G(n, p)


def test_gnp_p_zero_empty():
    g = sample_gnp(4, 0.0, stream(1))
    assert g.edges == frozenset()


def test_gnp_p_one_complete():
    g = sample_gnp(4, 1.0, stream(2))
    assert g.edges == frozenset({(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)})


def test_gnp_edge_count_within_five_sigma():
    # Bin(499500, 0.5): mean 249750, sigma ~ 353.4, so [247983, 251517].
    g = sample_gnp(1000, 0.5, stream(3))
    assert 247983 <= g.edge_count() <= 251517


def test_gnp_rejects_bad_p():
    with pytest.raises(ValueError):
        sample_gnp(4, -0.1, stream(0))
    with pytest.raises(ValueError):
        sample_gnp(4, 1.5, stream(0))


def test_gnp_deterministic_given_stream():
    a = sample_gnp(50, 0.2, stream(9, "t", 0))
    b = sample_gnp(50, 0.2, stream(9, "t", 0))
    assert a == b


def test_count_then_place_matches_bernoulli_enumeration():
    # Oracle: exact per-pair Bernoulli law P(E) = p^|E| (1-p)^(6-|E|) over
    # all 64 edge sets of n=4; chi-square on 1e5 placements must not reject.
    from scipy.stats import chisquare

    pair_index = {p: i for i, p in enumerate([(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])}
    for p, seed in ((0.25, 101), (0.5, 102)):
        counts = np.zeros(64, dtype=np.int64)
        base = RngStream(seed)
        samples = 100_000
        for t in range(samples):
            g = sample_gnp(4, p, base.child(t))
            mask = 0
            for e in g.edges:
                mask |= 1 << pair_index[e]
            counts[mask] += 1
        expected = np.array(
            [p ** bin(m).count("1") * (1 - p) ** (6 - bin(m).count("1")) for m in range(64)]
        )
        stat, pvalue = chisquare(counts, expected * samples)
        assert pvalue > 0.001, f"count-then-place law rejected at p={p}: {pvalue}"


# ---------------------------------------------------------------------------
# Power law


def test_power_law_matches_gnp_at_equivalent_p():
    s = stream(4, "x")
    assert sample_power_law_graph(16, 0.25, s) == sample_gnp(16, 0.5, s)


def test_power_law_expected_edges():
    # n=100, alpha=0.5 -> p=0.1; mean 495, sigma ~ 21.1; assert +-5 sigma.
    g = sample_power_law_graph(100, 0.5, stream(5))
    assert abs(g.edge_count() - 495) <= 5 * 21.2


def test_power_law_single_node():
    g = sample_power_law_graph(1, 0.3, stream(6))
    assert g.n == 1 and g.edges == frozenset()


def test_power_law_rejects_bad_alpha():
    for alpha in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            sample_power_law_graph(10, alpha, stream(0))


# ---------------------------------------------------------------------------
# Double digraph


def test_double_digraph_moments_n1024():
    pair = AlphaPair(0.1, 0.2)
    g = sample_double_digraph(1024, pair, stream(7))
    # |R2| ~ Bin(1047552, 2^-8): mean 4092, sigma ~ 63.9
    assert abs(g.edge_count(2) - 4092.0) <= 5 * 63.9
    # |R1| ~ Bin(1047552, 2^-11): mean 511.5, sigma ~ 22.6
    assert abs(g.edge_count(1) - 511.5) <= 5 * 22.7


def test_double_digraph_single_node():
    g = sample_double_digraph(1, AlphaPair(0.1, 0.2), stream(8))
    assert g.edge_count(1) == 0 and g.edge_count(2) == 0


def test_double_digraph_deterministic():
    pair = AlphaPair(0.05, 0.15)
    a = sample_double_digraph(64, pair, stream(11, "t", 3))
    b = sample_double_digraph(64, pair, stream(11, "t", 3))
    assert a == b


@given(n=st.integers(1, 30), seed=st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_double_digraph_irreflexive_and_in_range(n, seed):
    g = sample_double_digraph(n, AlphaPair(0.1, 0.2), stream(seed))
    for iota in (1, 2):
        for a in range(1, n + 1):
            out = g.out(a, iota)
            assert a not in out
            assert all(1 <= b <= n for b in out)


def test_double_digraph_rejects_self_loops_and_range():
    with pytest.raises(ValueError):
        DoubleDigraph(3, [(1, 1)], [])
    with pytest.raises(ValueError):
        DoubleDigraph(3, [], [(1, 4)])
    with pytest.raises(ValueError):
        DoubleDigraph(0, [], [])


def test_out_degrees_and_maps_agree():
    g = sample_double_digraph(40, AlphaPair(0.1, 0.2), stream(13))
    for iota in (1, 2):
        degs = g.out_degrees(iota)
        for a in range(1, 41):
            assert degs[a - 1] == len(g.out(a, iota))


# ---------------------------------------------------------------------------
# Serialization


def test_graph_json_round_trip():
    g = sample_gnp(12, 0.4, stream(14))
    d = g.to_json_dict()
    assert d["edges"] == sorted(d["edges"])
    assert Graph.from_json_dict(d) == g
    assert structure_from_json_dict(d) == g


def test_double_digraph_json_round_trip():
    g = sample_double_digraph(12, AlphaPair(0.1, 0.2), stream(15))
    d = g.to_json_dict()
    assert d["r1"] == sorted(d["r1"]) and d["r2"] == sorted(d["r2"])
    assert DoubleDigraph.from_json_dict(d) == g
    assert structure_from_json_dict(d) == g


def test_structure_from_json_rejects_unknown_shape():
    with pytest.raises(ValueError):
        structure_from_json_dict({"n": 3})


# ---------------------------------------------------------------------------
# Deferred revelation


def test_deferred_p_zero_all_reveals_empty():
    d = open_deferred(5, 0.0, 0.0, stream(16))
    for a in range(1, 6):
        for iota in (1, 2):
            assert reveal_out(d, a, iota) == frozenset()


def test_deferred_p_one_reveals_everything():
    d = open_deferred(5, 1.0, 1.0, stream(17))
    for a in range(1, 6):
        for iota in (1, 2):
            assert reveal_out(d, a, iota) == frozenset(range(1, 6)) - {a}


def test_deferred_memoizes():
    d = open_deferred(30, 0.3, 0.3, stream(18))
    first = reveal_out(d, 7, 2)
    assert reveal_out(d, 7, 2) == first
    assert d.revealed[(7, 2)] == first


def test_deferred_reveal_order_invariant():
    pair = AlphaPair(0.1, 0.2)
    d1 = DeferredDigraph.from_alpha(20, pair, stream(19, "s"))
    d2 = DeferredDigraph.from_alpha(20, pair, stream(19, "s"))
    cells = [(a, iota) for a in range(1, 21) for iota in (1, 2)]
    for a, iota in cells:
        d1.reveal_out(a, iota)
    for a, iota in reversed(cells):
        d2.reveal_out(a, iota)
    assert d1.reveal_all() == d2.reveal_all()


def test_deferred_rejects_bad_arguments():
    with pytest.raises(ValueError):
        open_deferred(5, -0.1, 0.5, stream(0))
    d = open_deferred(5, 0.5, 0.5, stream(0))
    with pytest.raises(ValueError):
        d.reveal_out(6, 1)
    with pytest.raises(ValueError):
        d.reveal_out(1, 3)


def test_deferred_mean_r2_close_to_eager():
    # Cheap version of the distributional-equality criterion: means of |R2|
    # at n=32 over 400 trials within 3 standard errors.
    pair = AlphaPair(0.1, 0.2)
    trials = 400
    lazy_counts, eager_counts = [], []
    for t in range(trials):
        d = DeferredDigraph.from_alpha(32, pair, stream(20, "lazy", t))
        lazy_counts.append(d.reveal_all().edge_count(2))
        g = sample_double_digraph(32, pair, stream(20, "eager", t))
        eager_counts.append(g.edge_count(2))
    lazy_arr, eager_arr = np.asarray(lazy_counts), np.asarray(eager_counts)
    se = math.sqrt(lazy_arr.var(ddof=1) / trials + eager_arr.var(ddof=1) / trials)
    assert abs(lazy_arr.mean() - eager_arr.mean()) <= 3 * se


def test_wrap_eager_passthrough(graph_a):
    oracle = wrap_eager(graph_a)
    assert oracle.n == 4
    assert oracle.reveal_out(1, 1) == frozenset({2})
    assert oracle.out(2, 2) == frozenset({4})
    empty = wrap_eager(DoubleDigraph(3, [], []))
    assert all(empty.out(a, i) == frozenset() for a in (1, 2, 3) for i in (1, 2))
    g = DoubleDigraph(4, [], [(3, 1), (3, 4)])
    assert wrap_eager(g).reveal_out(3, 2) == frozenset({1, 4})
