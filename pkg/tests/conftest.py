from __future__ import annotations

import numpy as np
import pytest

from stratlab import DoubleDigraph, RngStream


@pytest.fixture
def graph_a() -> DoubleDigraph:
    """Hand-traced structure A: R1 wins at the root, then R2; node 3 is
    shadowed by the priority rule."""
    return DoubleDigraph(4, [(1, 2)], [(1, 3), (2, 4)])


@pytest.fixture
def graph_b() -> DoubleDigraph:
    """Hand-traced structure B: a pure R1 chain."""
    return DoubleDigraph(3, [(1, 2), (2, 3)], [])


def random_digraph(n: int, p: float, seed: int) -> DoubleDigraph:
    """Small random double digraph with independent per-pair probability p
    for both relations; built by direct Bernoulli draws (independent of the
    package's count-then-place samplers)."""
    gen = np.random.default_rng(seed)
    r1, r2 = [], []
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            if a == b:
                continue
            if gen.random() < p:
                r1.append((a, b))
            if gen.random() < p:
                r2.append((a, b))
    return DoubleDigraph(n, r1, r2)


def stream(seed: int = 0, *path) -> RngStream:
    return RngStream(seed).child(*path) if path else RngStream(seed)
