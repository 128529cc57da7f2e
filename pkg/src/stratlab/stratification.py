"""Stratified exploration of two-relation structures.

Starting from a root node ``a``, levels ``S_0 = {a}, S_1, S_2, ...`` are grown
one at a time.  At each step the R1 question is asked first: is there an
R1-edge from the current level to a node not yet in any level?  If yes, the
next level is all such R1-targets.  Only if R1 fails is the same question
asked of R2.  When both fail the construction stops and the index of the last
level is the height of the root.

Three implementations of the same definition are provided:

* :func:`stratify` — the production path.  Over a native
  :class:`~stratlab.sampler.DoubleDigraph` it runs a compiled CSR kernel;
  over any other :class:`BiRelationalView` (a deferred digraph, a wrapped
  eager one, a formula-derived view) it runs a straightforward set-based
  loop that queries ``out(a, iota)`` on demand.
* :func:`brute_stratify` — an unoptimized reference that re-scans all node
  pairs at every step; the test oracle.  Intended for small ``n`` only.

Over a deferred digraph, :func:`stratify` reveals out-edges of level nodes
exactly when the construction inspects them, so the resulting stratification
has the same law as stratifying a fully pre-sampled structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Protocol, runtime_checkable

import numpy as np

from .sampler import DoubleDigraph, Graph

__all__ = [
    "BiRelationalView",
    "FormulaView",
    "adjacency_view",
    "Stratification",
    "LevelSummary",
    "stratify",
    "stratify_summary",
    "brute_stratify",
    "height_of_node",
    "height_of_graph",
    "height_of_sample",
    "USING_COMPILED_KERNEL",
]


@runtime_checkable
class BiRelationalView(Protocol):
    """Anything exposing a node count and two out-neighbor relations.

    ``out(a, iota)`` must never contain ``a`` and must return the same set on
    repeated queries.  Native digraphs, deferred digraphs, and formula-derived
    views all satisfy this, which makes them interchangeable consumers of one
    stratification algorithm.
    """

    @property
    def n(self) -> int: ...

    def out(self, a: int, iota: int) -> frozenset[int]: ...


class FormulaView:
    """Two-relation view of a plain graph through caller-supplied pair
    predicates (the hook for formula-defined relations).

    ``pred1(graph, a, b)`` and ``pred2(graph, a, b)`` decide edge membership;
    the diagonal is excluded regardless of what the predicates say, and
    out-sets are cached so repeated queries agree even for impure predicates.
    """

    def __init__(
        self,
        graph: Graph,
        pred1: Callable[[Graph, int, int], bool],
        pred2: Callable[[Graph, int, int], bool],
    ):
        self._graph = graph
        self._preds = {1: pred1, 2: pred2}
        self._cache: dict[tuple[int, int], frozenset[int]] = {}

    @property
    def n(self) -> int:
        return self._graph.n

    def out(self, a: int, iota: int) -> frozenset[int]:
        if not (1 <= a <= self.n):
            raise ValueError(f"node {a} outside 1..{self.n}")
        if iota not in (1, 2):
            raise ValueError(f"relation index must be 1 or 2, got {iota}")
        key = (a, iota)
        cached = self._cache.get(key)
        if cached is None:
            pred = self._preds[iota]
            cached = frozenset(
                b for b in range(1, self.n + 1) if b != a and pred(self._graph, a, b)
            )
            self._cache[key] = cached
        return cached


def adjacency_view(graph: Graph) -> FormulaView:
    """FormulaView whose both relations are the graph's own edge relation."""
    adj = {a: set() for a in range(1, graph.n + 1)}
    for x, y in graph.edges:
        adj[x].add(y)
        adj[y].add(x)
    pred = lambda g, a, b: b in adj[a]
    return FormulaView(graph, pred, pred)


# ---------------------------------------------------------------------------
# Result types


@dataclass(frozen=True)
class Stratification:
    """Levels grown from a root: ``levels[k]`` is S_k (sorted), ``step_kinds[k]``
    is the relation used to build S_{k+1}, and ``height`` the last index."""

    root: int
    levels: tuple[tuple[int, ...], ...]
    step_kinds: tuple[int, ...]
    height: int

    def __post_init__(self) -> None:
        if self.height != len(self.levels) - 1 or self.height != len(self.step_kinds):
            raise ValueError("inconsistent stratification shape")
        if self.levels[0] != (self.root,):
            raise ValueError("S_0 must be exactly the root")
        if any(kind not in (1, 2) for kind in self.step_kinds):
            raise ValueError("step kinds must be 1 or 2")

    @cached_property
    def level_map(self) -> dict[int, int]:
        """Node -> level index, for every node that appears in some level."""
        return {b: k for k, level in enumerate(self.levels) for b in level}

    def total_nodes(self) -> int:
        return sum(len(level) for level in self.levels)

    def to_json_dict(self) -> dict:
        return {
            "root": self.root,
            "levels": [list(level) for level in self.levels],
            "step_kinds": list(self.step_kinds),
            "height": self.height,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Stratification":
        return cls(
            int(d["root"]),
            tuple(tuple(int(b) for b in level) for level in d["levels"]),
            tuple(int(k) for k in d["step_kinds"]),
            int(d["height"]),
        )


@dataclass(frozen=True)
class LevelSummary:
    """Compact stratification record from the fast path.

    ``node_level[b]`` is the level of node ``b`` or -1 (index 0 unused);
    ``sizes[k] == |S_k|``.  Enough to reconstruct the full object or to feed
    the bounds/height surveys without materializing level lists.
    """

    root: int
    node_level: np.ndarray
    sizes: np.ndarray
    step_kinds: np.ndarray
    height: int

    def witness_mins(self) -> np.ndarray:
        """Minimum node of each level (the canonical level witnesses)."""
        visited = np.nonzero(self.node_level >= 0)[0]
        mins = np.full(self.height + 1, self.node_level.size, dtype=np.int64)
        np.minimum.at(mins, self.node_level[visited], visited)
        return mins

    def to_stratification(self) -> Stratification:
        visited = np.nonzero(self.node_level >= 0)[0]
        order = np.argsort(self.node_level[visited], kind="stable")
        grouped = np.split(visited[order], np.cumsum(self.sizes)[:-1])
        levels = tuple(tuple(group.tolist()) for group in grouped)
        return Stratification(self.root, levels, tuple(self.step_kinds.tolist()), self.height)


# ---------------------------------------------------------------------------
# Core loop: one compiled, one pure-Python, identical semantics


def _strat_loop_py(n, ip1, ix1, ip2, ix2, root):
    node_level = np.full(n + 1, -1, np.int64)
    node_level[root] = 0
    sizes = [1]
    kinds = []
    frontier = [root]
    while True:
        nxt = []
        for a in frontier:
            for j in range(ip1[a], ip1[a + 1]):
                b = ix1[j]
                if node_level[b] < 0:
                    node_level[b] = len(sizes)
                    nxt.append(b)
        kind = 1
        if not nxt:
            for a in frontier:
                for j in range(ip2[a], ip2[a + 1]):
                    b = ix2[j]
                    if node_level[b] < 0:
                        node_level[b] = len(sizes)
                        nxt.append(b)
            kind = 2
        if not nxt:
            return (
                node_level,
                np.asarray(sizes, np.int64),
                np.asarray(kinds, np.int8),
                len(sizes) - 1,
            )
        kinds.append(kind)
        sizes.append(len(nxt))
        frontier = nxt


try:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _strat_loop_nb(n, ip1, ix1, ip2, ix2, root):  # pragma: no cover - jitted
        node_level = np.full(n + 1, -1, np.int64)
        node_level[root] = 0
        frontier = np.empty(n, np.int64)
        frontier[0] = root
        flen = 1
        sizes = np.empty(n + 1, np.int64)
        kinds = np.empty(n + 1, np.int8)
        sizes[0] = 1
        h = 0
        nxt = np.empty(n, np.int64)
        while True:
            cnt = 0
            for fi in range(flen):
                a = frontier[fi]
                for j in range(ip1[a], ip1[a + 1]):
                    b = ix1[j]
                    if node_level[b] < 0:
                        node_level[b] = h + 1
                        nxt[cnt] = b
                        cnt += 1
            kind = 1
            if cnt == 0:
                for fi in range(flen):
                    a = frontier[fi]
                    for j in range(ip2[a], ip2[a + 1]):
                        b = ix2[j]
                        if node_level[b] < 0:
                            node_level[b] = h + 1
                            nxt[cnt] = b
                            cnt += 1
                kind = 2
            if cnt == 0:
                return node_level, sizes[: h + 1].copy(), kinds[:h].copy(), h
            kinds[h] = kind
            h += 1
            sizes[h] = cnt
            frontier[:cnt] = nxt[:cnt]
            flen = cnt

    _strat_loop = _strat_loop_nb
    USING_COMPILED_KERNEL = True
except ImportError:  # pragma: no cover - exercised only without numba
    _strat_loop = _strat_loop_py
    USING_COMPILED_KERNEL = False


def stratify_summary(g: DoubleDigraph, root: int) -> LevelSummary:
    """Fast-path stratification of a native digraph, as a compact summary."""
    if not (1 <= root <= g.n):
        raise ValueError(f"root {root} outside 1..{g.n}")
    ip1, ix1 = g.csr(1)
    ip2, ix2 = g.csr(2)
    node_level, sizes, kinds, h = _strat_loop(g.n, ip1, ix1, ip2, ix2, root)
    return LevelSummary(root, node_level, sizes, kinds, h)


def _stratify_view(view: BiRelationalView, root: int) -> Stratification:
    visited = {root}
    levels = [(root,)]
    kinds: list[int] = []
    frontier: tuple[int, ...] = (root,)
    while True:
        found: set[int] = set()
        for a in frontier:
            found |= view.out(a, 1)
        found -= visited
        kind = 1
        if not found:
            for a in frontier:
                found |= view.out(a, 2)
            found -= visited
            kind = 2
        if not found:
            return Stratification(root, tuple(levels), tuple(kinds), len(levels) - 1)
        frontier = tuple(sorted(found))
        visited |= found
        levels.append(frontier)
        kinds.append(kind)


def stratify(view: BiRelationalView, root: int) -> Stratification:
    """Grow the level sequence from ``root`` by the R1-before-R2 rule.

    Pure in its inputs: identical results across runs and thread counts.
    Over a deferred digraph the call mutates that oracle's memo table, so the
    caller must own the instance.
    """
    if isinstance(view, DoubleDigraph):
        return stratify_summary(view, root).to_stratification()
    if not (1 <= root <= view.n):
        raise ValueError(f"root {root} outside 1..{view.n}")
    return _stratify_view(view, root)


def brute_stratify(view: BiRelationalView, root: int) -> Stratification:
    """Reference implementation: recompute every level by scanning all node
    pairs, with no incremental bookkeeping.  Oracle for :func:`stratify`;
    intended for small structures (n <= 12).
    """
    if not (1 <= root <= view.n):
        raise ValueError(f"root {root} outside 1..{view.n}")
    n = view.n
    levels: list[set[int]] = [{root}]
    kinds: list[int] = []
    while True:
        union = set().union(*levels)
        current = levels[-1]
        nxt = None
        for iota in (1, 2):
            candidates = {
                b
                for b in range(1, n + 1)
                if b not in union and any(b in view.out(a, iota) for a in current)
            }
            if candidates:
                nxt = candidates
                kinds.append(iota)
                break
        if nxt is None:
            return Stratification(
                root,
                tuple(tuple(sorted(level)) for level in levels),
                tuple(kinds),
                len(levels) - 1,
            )
        levels.append(nxt)


def height_of_node(view: BiRelationalView, a: int) -> int:
    """Height of ``a``: the index at which stratification from ``a`` stops."""
    if isinstance(view, DoubleDigraph):
        return stratify_summary(view, a).height
    return stratify(view, a).height


def height_of_graph(g: BiRelationalView) -> int:
    """Maximum height over all nodes."""
    return max(height_of_node(g, a) for a in range(1, g.n + 1))


def height_of_sample(g: BiRelationalView, roots: Iterable[int]) -> int:
    """Maximum height over a nonempty set of sampled roots."""
    roots = sorted(set(roots))
    if not roots:
        raise ValueError("root set must be nonempty")
    if roots[0] < 1 or roots[-1] > g.n:
        raise ValueError(f"roots outside 1..{g.n}")
    return max(height_of_node(g, a) for a in roots)
