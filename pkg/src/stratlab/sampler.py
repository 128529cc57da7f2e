"""Random structure samplers.

Three models are supported:

* ``G(n, p)`` — the binomial random graph, each unordered pair an edge
  independently with probability ``p``;
* ``G(n, 1/n^alpha)`` — the power-law special case ``p = n**-alpha``;
* the double digraph ``G(n, (alpha1, alpha2))`` — two independent irreflexive
  relations on ordered pairs, ``R1`` at probability ``n**-(1+alpha1)`` and
  ``R2`` at probability ``n**-(1-alpha2)``.

Samplers draw the edge count from the exact binomial law and then place that
many distinct pairs uniformly at random, which is equivalent in distribution
to independent per-pair Bernoulli draws but runs in time proportional to the
expected number of edges.  All randomness flows through :class:`RngStream`,
so results are reproducible and independent of execution order.

:class:`DeferredDigraph` draws the same double-digraph distribution lazily,
revealing one out-neighborhood at a time; algorithms that only inspect part
of the structure never pay for the rest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .rng import RngStream

__all__ = [
    "AlphaPair",
    "ConstantP",
    "PowerLaw",
    "DoubleAlpha",
    "ModelSpec",
    "Graph",
    "DoubleDigraph",
    "DeferredDigraph",
    "EagerOracle",
    "edge_probability",
    "sample_gnp",
    "sample_power_law_graph",
    "sample_double_digraph",
    "sample_model",
    "open_deferred",
    "reveal_out",
    "wrap_eager",
    "model_to_json_dict",
    "model_from_json_dict",
    "structure_from_json_dict",
]


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class AlphaPair:
    """Exponent pair ``(alpha1, alpha2)`` governing double-digraph edge
    probabilities.  Must satisfy ``0 < alpha1 < alpha2 < 1/4``.

    The theory behind the model additionally wants the exponents irrational;
    machine floats cannot express that, so it is documented as a hypothesis
    of the limit statements rather than enforced here.
    """

    alpha1: float
    alpha2: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha1 < self.alpha2 < 0.25):
            raise ValueError(
                f"AlphaPair requires 0 < alpha1 < alpha2 < 1/4, "
                f"got ({self.alpha1}, {self.alpha2})"
            )

    # Derived exponents used throughout the experiment harness.
    @property
    def r1_exponent(self) -> float:
        """Exponent of the R1 edge probability, ``1 + alpha1``."""
        return 1.0 + self.alpha1

    @property
    def r2_exponent(self) -> float:
        """Exponent of the R2 edge probability, ``1 - alpha2``."""
        return 1.0 - self.alpha2

    @property
    def level_bound_exponent(self) -> float:
        """Exponent of the level-size bound, ``2 * alpha2``."""
        return 2.0 * self.alpha2

    @property
    def mid_exponent(self) -> float:
        """Exponent of the diagnostic threshold, ``(alpha1 + alpha2) / 2``."""
        return (self.alpha1 + self.alpha2) / 2.0


@dataclass(frozen=True)
class ConstantP:
    """Model spec: G(n, p) with constant edge probability."""

    p: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"edge probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class PowerLaw:
    """Model spec: G(n, 1/n^alpha) with alpha in the open interval (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"power-law exponent must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class DoubleAlpha:
    """Model spec: the double digraph G(n, (alpha1, alpha2))."""

    pair: AlphaPair


ModelSpec = Union[ConstantP, PowerLaw, DoubleAlpha]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``1..n``.

    ``edges`` holds unordered pairs normalized to ``(a, b)`` with ``a < b``.
    """

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        for a, b in self.edges:
            if not (1 <= a < b <= self.n):
                raise ValueError(f"invalid edge ({a}, {b}) for n={self.n}")

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Graph":
        norm = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"self-loop ({a}, {b}) not allowed")
            norm.add((a, b) if a < b else (b, a))
        return cls(n, frozenset(norm))

    def neighbors(self, a: int) -> frozenset[int]:
        if not (1 <= a <= self.n):
            raise ValueError(f"node {a} outside 1..{self.n}")
        out = set()
        for x, y in self.edges:
            if x == a:
                out.add(y)
            elif y == a:
                out.add(x)
        return frozenset(out)

    def edge_count(self) -> int:
        return len(self.edges)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": sorted([a, b] for a, b in self.edges)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Graph":
        return cls.from_pairs(int(d["n"]), [(int(a), int(b)) for a, b in d["edges"]])


class DoubleDigraph:
    """The sampled structure ``([n], R1, R2)``: two irreflexive relations on
    ordered pairs.

    Immutable after construction.  ``r1`` and ``r2`` expose the spec-level
    out-neighbor maps; internally the edges are kept as sorted arrays, with
    CSR adjacency built lazily for the fast stratification path.
    """

    __slots__ = ("n", "_src", "_dst", "_maps", "_csr")

    def __init__(
        self,
        n: int,
        r1_pairs: Iterable[tuple[int, int]],
        r2_pairs: Iterable[tuple[int, int]],
    ):
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        self.n = int(n)
        self._src: dict[int, np.ndarray] = {}
        self._dst: dict[int, np.ndarray] = {}
        self._maps: dict[int, dict[int, frozenset[int]]] = {}
        self._csr: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for iota, pairs in ((1, r1_pairs), (2, r2_pairs)):
            src, dst = _canonical_pair_arrays(self.n, pairs)
            self._src[iota] = src
            self._dst[iota] = dst

    @classmethod
    def _from_arrays(cls, n: int, src1, dst1, src2, dst2) -> "DoubleDigraph":
        """Construct from already-validated, lex-sorted edge arrays."""
        g = cls.__new__(cls)
        g.n = int(n)
        g._src = {1: src1, 2: src2}
        g._dst = {1: dst1, 2: dst2}
        g._maps = {}
        g._csr = {}
        return g

    @property
    def r1(self) -> dict[int, frozenset[int]]:
        return self._out_map(1)

    @property
    def r2(self) -> dict[int, frozenset[int]]:
        return self._out_map(2)

    def _out_map(self, iota: int) -> dict[int, frozenset[int]]:
        if iota not in self._maps:
            indptr, indices = self.csr(iota)
            self._maps[iota] = {
                a: frozenset(indices[indptr[a] : indptr[a + 1]].tolist())
                for a in range(1, self.n + 1)
            }
        return self._maps[iota]

    def out(self, a: int, iota: int) -> frozenset[int]:
        """Out-neighbors of ``a`` under relation ``iota`` in {1, 2}."""
        if not (1 <= a <= self.n):
            raise ValueError(f"node {a} outside 1..{self.n}")
        _check_iota(iota)
        return self._out_map(iota)[a]

    def csr(self, iota: int) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency in CSR form: (indptr, indices), 1-indexed rows."""
        _check_iota(iota)
        if iota not in self._csr:
            src, dst = self._src[iota], self._dst[iota]
            indptr = np.zeros(self.n + 2, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._csr[iota] = (indptr, dst.copy())
        return self._csr[iota]

    def edge_count(self, iota: int) -> int:
        _check_iota(iota)
        return int(self._src[iota].size)

    def out_degrees(self, iota: int) -> np.ndarray:
        """Out-degree of each node under ``iota``; index 0 is node 1."""
        indptr, _ = self.csr(iota)
        return np.diff(indptr[1:])

    def edge_pairs(self, iota: int) -> np.ndarray:
        """Edges of relation ``iota`` as an (m, 2) array, lex-sorted."""
        _check_iota(iota)
        return np.column_stack((self._src[iota], self._dst[iota]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DoubleDigraph):
            return NotImplemented
        return (
            self.n == other.n
            and all(np.array_equal(self._src[i], other._src[i]) for i in (1, 2))
            and all(np.array_equal(self._dst[i], other._dst[i]) for i in (1, 2))
        )

    def __repr__(self) -> str:
        return (
            f"DoubleDigraph(n={self.n}, |R1|={self.edge_count(1)}, "
            f"|R2|={self.edge_count(2)})"
        )

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "r1": self.edge_pairs(1).tolist(),
            "r2": self.edge_pairs(2).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DoubleDigraph":
        return cls(
            int(d["n"]),
            [(int(a), int(b)) for a, b in d["r1"]],
            [(int(a), int(b)) for a, b in d["r2"]],
        )


def _check_iota(iota: int) -> None:
    if iota not in (1, 2):
        raise ValueError(f"relation index must be 1 or 2, got {iota}")


def _canonical_pair_arrays(
    n: int, pairs: Iterable[tuple[int, int]]
) -> tuple[np.ndarray, np.ndarray]:
    """Validate ordered pairs and return deduplicated, lex-sorted arrays."""
    pair_list = list(pairs)
    if not pair_list:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    arr = np.asarray(pair_list, dtype=np.int64)
    src, dst = arr[:, 0], arr[:, 1]
    if np.any(src == dst):
        bad = int(src[src == dst][0])
        raise ValueError(f"self-loop ({bad}, {bad}) not allowed")
    if np.any((src < 1) | (src > n) | (dst < 1) | (dst > n)):
        raise ValueError(f"edge endpoint outside 1..{n}")
    keys = np.unique(src * np.int64(n + 1) + dst)
    return keys // (n + 1), keys % (n + 1)


# ---------------------------------------------------------------------------
# Edge probabilities and samplers


def edge_probability(n: int, pair: AlphaPair, iota: int) -> float:
    """Per-pair edge probability of relation ``iota`` at node count ``n``:
    ``n**-(1+alpha1)`` for R1 and ``n**-(1-alpha2)`` for R2.
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    _check_iota(iota)
    if iota == 1:
        return float(n) ** -pair.r1_exponent
    return float(n) ** -pair.r2_exponent


def _uniform_distinct(total: int, m: int, gen: np.random.Generator) -> np.ndarray:
    """A uniformly random m-subset of ``range(total)``, as an int64 array.

    Sparse requests are served by rejection (draw with replacement, keep
    first occurrences); dense requests sample the complement instead, so the
    cost is ``O(min(m, total - m))`` draws plus a mask in the dense case.
    """
    if not (0 <= m <= total):
        raise ValueError(f"cannot choose {m} from {total}")
    if m == 0:
        return np.empty(0, np.int64)
    if m == total:
        return np.arange(total, dtype=np.int64)
    if m > total // 2:
        excluded = _uniform_distinct(total, total - m, gen)
        mask = np.ones(total, dtype=bool)
        mask[excluded] = False
        return np.nonzero(mask)[0].astype(np.int64)
    chosen = np.empty(0, np.int64)
    while chosen.size < m:
        need = m - chosen.size
        batch = gen.integers(0, total, size=need + need // 2 + 16, dtype=np.int64)
        pool = np.concatenate((chosen, batch))
        _, first = np.unique(pool, return_index=True)
        first.sort()  # first-occurrence order keeps the subset uniform
        chosen = pool[first[:m]]
    return chosen


def _decode_ordered(ks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map indices in ``[0, n*(n-1))`` to ordered pairs (a, b), a != b."""
    a = ks // (n - 1) + 1
    r = ks % (n - 1)
    b = r + 1 + (r + 1 >= a)
    return a, b


def _sample_relation(n: int, p: float, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw one irreflexive relation: count from Binomial(n*(n-1), p), then
    that many distinct ordered pairs placed uniformly."""
    if n == 1:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    total = n * (n - 1)
    m = int(gen.binomial(total, p))
    ks = _uniform_distinct(total, m, gen)
    return _decode_ordered(ks, n)

def _sample_unordered(n: int, p: float, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw an undirected edge set the same way: exact binomial count, then
    uniform placement over unordered pairs.

    Sparse placement draws ordered pairs and canonicalizes (each unordered
    pair has exactly two ordered representatives, so uniformity survives);
    dense placement enumerates the triangle and keeps a uniform complement.
    """
    if n == 1:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    total = n * (n - 1) // 2
    m = int(gen.binomial(total, p))
    if m == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if m > total // 2:
        au, bu = np.triu_indices(n, k=1)
        idx = _uniform_distinct(total, m, gen)
        return au[idx].astype(np.int64) + 1, bu[idx].astype(np.int64) + 1
    chosen = np.empty(0, np.int64)  # canonical keys (a-1)*n + (b-1), a < b
    while chosen.size < m:
        need = m - chosen.size
        ks = gen.integers(0, n * (n - 1), size=need + need // 2 + 16, dtype=np.int64)
        a, b = _decode_ordered(ks, n)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = (lo - 1) * np.int64(n) + (hi - 1)
        pool = np.concatenate((chosen, keys))
        _, first = np.unique(pool, return_index=True)
        first.sort()
        chosen = pool[first[:m]]
    return chosen // n + 1, chosen % n + 1


def sample_gnp(n: int, p: float, stream: RngStream) -> Graph:
    """Sample G(n, p): every unordered pair an edge independently with
    probability ``p``, deterministic given the stream.
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    a, b = _sample_unordered(n, p, stream.generator())
    return Graph(n, frozenset(zip(a.tolist(), b.tolist())))


def sample_power_law_graph(n: int, alpha: float, stream: RngStream) -> Graph:
    """Sample G(n, 1/n^alpha) for ``alpha`` in the open interval (0, 1)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"power-law exponent must lie in (0, 1), got {alpha}")
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    return sample_gnp(n, float(n) ** -alpha, stream)


def sample_double_digraph(n: int, pair: AlphaPair, stream: RngStream) -> DoubleDigraph:
    """Sample the double digraph: all ``2*n*(n-1)`` ordered-pair memberships
    independent, R2 at ``n**-(1-alpha2)`` and R1 at ``n**-(1+alpha1)``.
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    gen = stream.generator()
    p1 = edge_probability(n, pair, 1)
    p2 = edge_probability(n, pair, 2)
    src1, dst1 = _sample_relation(n, p1, gen)
    src2, dst2 = _sample_relation(n, p2, gen)

    def _sort(src, dst):
        keys = src * np.int64(n + 1) + dst
        order = np.argsort(keys)
        return src[order], dst[order]

    src1, dst1 = _sort(src1, dst1)
    src2, dst2 = _sort(src2, dst2)
    return DoubleDigraph._from_arrays(n, src1, dst1, src2, dst2)


def sample_model(model: ModelSpec, n: int, stream: RngStream):
    """Dispatch a model spec to its sampler."""
    if isinstance(model, ConstantP):
        return sample_gnp(n, model.p, stream)
    if isinstance(model, PowerLaw):
        return sample_power_law_graph(n, model.alpha, stream)
    if isinstance(model, DoubleAlpha):
        return sample_double_digraph(n, model.pair, stream)
    raise TypeError(f"unknown model spec: {model!r}")


# ---------------------------------------------------------------------------
# Deferred (staged) edge revelation


class DeferredDigraph:
    """Double digraph whose edges are drawn only when inspected.

    Out-neighborhoods are revealed one ``(node, iota)`` cell at a time; each
    cell draws its Bernoulli memberships from a dedicated sub-stream, so the
    revealed structure is independent of the order in which cells are
    queried, and the joint law of all eventually-revealed edges equals the
    eager sampler's with the same ``(n, p1, p2)``.

    Single-owner mutable: do not share one instance across threads.
    """

    __slots__ = ("n", "p1", "p2", "_stream", "revealed")

    def __init__(self, n: int, p1: float, p2: float, stream: RngStream):
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        for name, p in (("p1", p1), ("p2", p2)):
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        self.n = int(n)
        self.p1 = float(p1)
        self.p2 = float(p2)
        self._stream = stream
        self.revealed: dict[tuple[int, int], frozenset[int]] = {}

    @classmethod
    def from_alpha(cls, n: int, pair: AlphaPair, stream: RngStream) -> "DeferredDigraph":
        return cls(n, edge_probability(n, pair, 1), edge_probability(n, pair, 2), stream)

    def reveal_out(self, a: int, iota: int) -> frozenset[int]:
        """Draw (once) and return the out-neighbors of ``a`` under ``iota``."""
        if not (1 <= a <= self.n):
            raise ValueError(f"node {a} outside 1..{self.n}")
        _check_iota(iota)
        key = (a, iota)
        cached = self.revealed.get(key)
        if cached is not None:
            return cached
        p = self.p1 if iota == 1 else self.p2
        gen = self._stream.child("cell", iota, a).generator()
        mask = gen.random(self.n - 1) < p
        others = np.concatenate(
            (np.arange(1, a, dtype=np.int64), np.arange(a + 1, self.n + 1, dtype=np.int64))
        )
        out = frozenset(others[mask].tolist())
        self.revealed[key] = out
        return out

    # BiRelationalView protocol
    def out(self, a: int, iota: int) -> frozenset[int]:
        return self.reveal_out(a, iota)

    def reveal_all(self) -> DoubleDigraph:
        """Force every cell and return the fully revealed eager structure."""
        pairs: dict[int, list[tuple[int, int]]] = {1: [], 2: []}
        for iota in (1, 2):
            for a in range(1, self.n + 1):
                for b in self.reveal_out(a, iota):
                    pairs[iota].append((a, b))
        return DoubleDigraph(self.n, pairs[1], pairs[2])


def open_deferred(n: int, p1: float, p2: float, stream: RngStream) -> DeferredDigraph:
    """Create a deferred digraph with nothing revealed yet."""
    return DeferredDigraph(n, p1, p2, stream)


def reveal_out(d: DeferredDigraph, a: int, iota: int) -> frozenset[int]:
    """Reveal (memoized) the out-neighbors of ``a`` under relation ``iota``."""
    return d.reveal_out(a, iota)


@dataclass(frozen=True)
class EagerOracle:
    """Deferred-compatible view of an already-sampled digraph; no randomness."""

    digraph: DoubleDigraph

    @property
    def n(self) -> int:
        return self.digraph.n

    def out(self, a: int, iota: int) -> frozenset[int]:
        return self.digraph.out(a, iota)

    def reveal_out(self, a: int, iota: int) -> frozenset[int]:
        return self.digraph.out(a, iota)


def wrap_eager(g: DoubleDigraph) -> EagerOracle:
    """Adapt an eager digraph to the deferred reveal interface."""
    return EagerOracle(g)


# ---------------------------------------------------------------------------
# Model spec serialization (used by configs and the CLI)


def model_to_json_dict(model: ModelSpec) -> dict:
    if isinstance(model, ConstantP):
        return {"kind": "gnp", "p": model.p}
    if isinstance(model, PowerLaw):
        return {"kind": "power-law", "alpha": model.alpha}
    if isinstance(model, DoubleAlpha):
        return {"kind": "double-alpha", "alpha1": model.pair.alpha1, "alpha2": model.pair.alpha2}
    raise TypeError(f"unknown model spec: {model!r}")


def model_from_json_dict(d: dict) -> ModelSpec:
    kind = d.get("kind")
    try:
        if kind == "gnp":
            return ConstantP(float(d["p"]))
        if kind == "power-law":
            return PowerLaw(float(d["alpha"]))
        if kind == "double-alpha":
            return DoubleAlpha(AlphaPair(float(d["alpha1"]), float(d["alpha2"])))
    except KeyError as exc:
        raise ValueError(f"model kind {kind!r} requires field {exc.args[0]!r}") from exc
    raise ValueError(f"unknown model kind: {kind!r}")


def structure_from_json_dict(d: dict):
    """Load either structure shape: a Graph ({'edges': ...}) or a
    DoubleDigraph ({'r1': ..., 'r2': ...})."""
    if "edges" in d:
        return Graph.from_json_dict(d)
    if "r1" in d and "r2" in d:
        return DoubleDigraph.from_json_dict(d)
    raise ValueError("structure JSON must contain either 'edges' or 'r1'/'r2'")
