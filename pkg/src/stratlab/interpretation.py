"""The definable structure on top of stratifications.

From the level sequences one can read off, uniformly in the structure: the
level index of a node, a 4-ary comparison between levels in two different
stratifications, a linear order whose carrier is the set of level indices,
and an initial segment of arithmetic on that carrier.  This module builds
those objects and evaluates the fixed sentence menu used by the experiment
harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .sampler import AlphaPair, DoubleDigraph, Graph
from .stratification import LevelSummary, Stratification, stratify, stratify_summary

__all__ = [
    "LevelOrder",
    "ArithSegment",
    "AllRoots",
    "SampleRoots",
    "RootPolicy",
    "TrueConst",
    "R2NonEmpty",
    "HeightParityEven",
    "HeightAtLeast",
    "AllLevelBoundsHold",
    "Sentence",
    "SentenceContextError",
    "level_of",
    "level_compare",
    "build_level_order",
    "check_level_order",
    "arithmetic_segment",
    "check_arith_segment",
    "eval_sentence",
    "parse_sentence",
    "format_sentence",
    "parse_root_policy",
    "format_root_policy",
]


class SentenceContextError(ValueError):
    """A sentence was evaluated in a context that cannot support it."""


# ---------------------------------------------------------------------------
# Level index and the 4-ary comparison


def level_of(s: Stratification, b: int) -> Optional[int]:
    """The unique level index of ``b`` in ``s``, or ``None`` if ``b`` appears
    in no level.  Uniqueness is guaranteed by level disjointness."""
    return s.level_map.get(b)


def level_compare(
    g: DoubleDigraph,
    a1: int,
    b1: int,
    a2: int,
    b2: int,
    cache: Optional[dict[int, Stratification]] = None,
) -> bool:
    """The 4-ary relation: true iff ``b1`` has a level ``k1`` in the
    stratification rooted at ``a1``, ``b2`` has a level ``k2`` rooted at
    ``a2``, and ``k1 <= k2``.  False whenever either level does not exist.

    ``cache`` (root -> stratification) lets callers amortize repeated roots.
    """
    for node in (a1, b1, a2, b2):
        if not (1 <= node <= g.n):
            raise ValueError(f"node {node} outside 1..{g.n}")

    def _strat(root: int) -> Stratification:
        if cache is None:
            return stratify(g, root)
        s = cache.get(root)
        if s is None:
            s = stratify(g, root)
            cache[root] = s
        return s

    k1 = level_of(_strat(a1), b1)
    if k1 is None:
        return False
    k2 = level_of(_strat(a2), b2)
    if k2 is None:
        return False
    return k1 <= k2


# ---------------------------------------------------------------------------
# The interpreted linear order


@dataclass(frozen=True)
class LevelOrder:
    """Linear order interpreted on the level indices ``0..height``, with one
    witness node per level (the minimum of that level, so the object is a
    deterministic function of the stratification)."""

    height: int
    witnesses: tuple[int, ...]

    @property
    def carrier(self) -> range:
        return range(self.height + 1)

    def leq(self, i: int, j: int) -> bool:
        if not (0 <= i <= self.height and 0 <= j <= self.height):
            raise ValueError(f"indices ({i}, {j}) outside carrier 0..{self.height}")
        return i <= j

    def to_json_dict(self) -> dict:
        # Materializes the full relation; meant for desk-scale orders.
        pairs = [[i, j] for i in self.carrier for j in self.carrier if self.leq(i, j)]
        return {
            "height": self.height,
            "witnesses": list(self.witnesses),
            "leq": pairs,
        }


def build_level_order(s: Stratification) -> LevelOrder:
    """Interpret the linear order with ``height + 1`` members from a
    stratification, certified isomorphic to ``({0..h}, <=)`` before return."""
    order = LevelOrder(s.height, tuple(min(level) for level in s.levels))
    check_level_order(order, s)
    return order


def check_level_order(
    order: LevelOrder,
    source: Union[Stratification, LevelSummary],
    exhaustive_cutoff: int = 64,
) -> None:
    """Explicit isomorphism check of a level order against ``({0..h}, <=)``.

    Verifies the carrier, witness membership in the source levels, and the
    order axioms.  Axioms are checked exhaustively up to ``exhaustive_cutoff``
    and on a deterministic probe grid (plus a full adjacent-pair sweep) above
    it, keeping the certification linear in the height.  Raises ValueError
    on any violation.
    """
    h = order.height
    if h != source.height:
        raise ValueError(f"order height {h} != source height {source.height}")
    if len(order.witnesses) != h + 1:
        raise ValueError("one witness required per carrier point")
    if isinstance(source, LevelSummary):
        for k, w in enumerate(order.witnesses):
            if not (0 <= w < source.node_level.size) or source.node_level[w] != k:
                raise ValueError(f"witness {w} is not in level {k}")
    else:
        for k, w in enumerate(order.witnesses):
            if source.level_map.get(w) != k:
                raise ValueError(f"witness {w} is not in level {k}")

    if h <= exhaustive_cutoff:
        probe = list(range(h + 1))
    else:
        step = max(1, h // 8)
        probe = sorted({0, 1, h - 1, h} | set(range(0, h + 1, step)))
    for i in probe:
        if not order.leq(i, i):
            raise ValueError(f"reflexivity fails at {i}")
    for i in probe:
        for j in probe:
            if order.leq(i, j) != (i <= j):
                raise ValueError(f"order disagrees with numeric <= at ({i}, {j})")
            if not (order.leq(i, j) or order.leq(j, i)):
                raise ValueError(f"totality fails at ({i}, {j})")
            if order.leq(i, j) and order.leq(j, i) and i != j:
                raise ValueError(f"antisymmetry fails at ({i}, {j})")
    for i in probe:
        for j in probe:
            for k in probe:
                if order.leq(i, j) and order.leq(j, k) and not order.leq(i, k):
                    raise ValueError(f"transitivity fails at ({i}, {j}, {k})")
    # Adjacent pairs swept in full even above the cutoff.
    for k in range(h):
        if not order.leq(k, k + 1) or order.leq(k + 1, k):
            raise ValueError(f"adjacent pair ({k}, {k + 1}) misordered")


# ---------------------------------------------------------------------------
# The arithmetic initial segment


@dataclass(frozen=True)
class ArithSegment:
    """Relational arithmetic on ``0..bound``: order, successor, and the graphs
    of addition and multiplication with out-of-range results omitted."""

    bound: int
    leq: frozenset[tuple[int, int]]
    succ: frozenset[tuple[int, int]]
    add: frozenset[tuple[int, int, int]]
    mul: frozenset[tuple[int, int, int]]

    def to_json_dict(self) -> dict:
        return {
            "bound": self.bound,
            "leq": sorted([i, j] for i, j in self.leq),
            "succ": sorted([i, j] for i, j in self.succ),
            "add": sorted([i, j, k] for i, j, k in self.add),
            "mul": sorted([i, j, k] for i, j, k in self.mul),
        }


def arithmetic_segment(s: Stratification) -> ArithSegment:
    """Arithmetic up to the stratification's height.  Quadratic in the bound;
    meant for desk-scale heights."""
    m = s.height
    rng = range(m + 1)
    return ArithSegment(
        bound=m,
        leq=frozenset((i, j) for i in rng for j in rng if i <= j),
        succ=frozenset((i, i + 1) for i in range(m)),
        add=frozenset((i, j, i + j) for i in rng for j in rng if i + j <= m),
        mul=frozenset((i, j, i * j) for i in rng for j in rng if i * j <= m),
    )


def check_arith_segment(seg: ArithSegment) -> None:
    """Cross-check every relation against direct integer arithmetic, in both
    directions (no missing and no spurious tuples).  Cubic in the bound."""
    m = seg.bound
    rng = range(m + 1)
    for i in rng:
        for j in rng:
            if ((i, j) in seg.leq) != (i <= j):
                raise ValueError(f"leq wrong at ({i}, {j})")
            if ((i, j) in seg.succ) != (j == i + 1):
                raise ValueError(f"succ wrong at ({i}, {j})")
            for k in rng:
                if ((i, j, k) in seg.add) != (i + j == k):
                    raise ValueError(f"add wrong at ({i}, {j}, {k})")
                if ((i, j, k) in seg.mul) != (i * j == k):
                    raise ValueError(f"mul wrong at ({i}, {j}, {k})")
    for i, j, k in seg.add:
        if i + j != k or k > m:
            raise ValueError(f"spurious add tuple ({i}, {j}, {k})")
    for i, j, k in seg.mul:
        if i * j != k or k > m:
            raise ValueError(f"spurious mul tuple ({i}, {j}, {k})")


# ---------------------------------------------------------------------------
# Root policies and the sentence menu


@dataclass(frozen=True)
class AllRoots:
    """Stratify from every node."""


@dataclass(frozen=True)
class SampleRoots:
    """Stratify from ``r`` roots sampled without replacement."""

    r: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"root sample size must be >= 1, got {self.r}")


RootPolicy = Union[AllRoots, SampleRoots]


def parse_root_policy(text: str) -> RootPolicy:
    if text == "all":
        return AllRoots()
    if text.startswith("sample:"):
        return SampleRoots(int(text.split(":", 1)[1]))
    raise ValueError(f"unknown root policy {text!r}; expected 'all' or 'sample:<r>'")


def format_root_policy(policy: RootPolicy) -> str:
    if isinstance(policy, AllRoots):
        return "all"
    return f"sample:{policy.r}"


@dataclass(frozen=True)
class TrueConst:
    """The always-true sentence."""


@dataclass(frozen=True)
class R2NonEmpty:
    """R2 contains at least one edge."""


@dataclass(frozen=True)
class HeightParityEven:
    """The height of the structure is even."""


@dataclass(frozen=True)
class HeightAtLeast:
    """The height of the structure is at least ``c``."""

    c: int

    def __post_init__(self) -> None:
        if self.c < 0:
            raise ValueError(f"height threshold must be >= 0, got {self.c}")


@dataclass(frozen=True)
class AllLevelBoundsHold:
    """Every level of every (policy-selected) stratification has at most
    ``slack * n**(2*alpha2)`` members."""

    slack: float = 4.0
    root_policy: Optional[RootPolicy] = None

    def __post_init__(self) -> None:
        if self.slack < 1.0:
            raise ValueError(f"slack must be >= 1, got {self.slack}")


Sentence = Union[TrueConst, R2NonEmpty, HeightParityEven, HeightAtLeast, AllLevelBoundsHold]


def _height_over(g: DoubleDigraph, roots: Optional[Sequence[int]]) -> int:
    if roots is None:
        roots = range(1, g.n + 1)
    return max(stratify_summary(g, a).height for a in roots)


def eval_sentence(
    g: Union[DoubleDigraph, Graph],
    psi: Sentence,
    *,
    pair: Optional[AlphaPair] = None,
    roots: Optional[Sequence[int]] = None,
) -> bool:
    """Evaluate a sentence on a structure.

    Height-based sentences are evaluated over ``roots`` when given (the
    experiment harness passes the policy-selected roots; heights over a large
    structure are otherwise quadratic-cost exact).  ``AllLevelBoundsHold``
    additionally needs the exponent ``pair`` to compute its bound and is
    rejected outside that context.
    """
    if isinstance(psi, TrueConst):
        return True
    if not isinstance(g, DoubleDigraph):
        raise SentenceContextError(
            f"sentence {format_sentence(psi)!r} needs a double digraph, got {type(g).__name__}"
        )
    if isinstance(psi, R2NonEmpty):
        return g.edge_count(2) > 0
    if isinstance(psi, HeightParityEven):
        return _height_over(g, roots) % 2 == 0
    if isinstance(psi, HeightAtLeast):
        return _height_over(g, roots) >= psi.c
    if isinstance(psi, AllLevelBoundsHold):
        if pair is None:
            raise SentenceContextError(
                "all-level-bounds needs the double-alpha exponent pair"
            )
        if roots is None:
            if isinstance(psi.root_policy, SampleRoots):
                raise SentenceContextError(
                    "sampled root policy requires resolved roots"
                )
            roots = range(1, g.n + 1)
        bound = psi.slack * float(g.n) ** pair.level_bound_exponent
        for a in roots:
            sizes = stratify_summary(g, a).sizes
            if int(sizes.max()) > bound:
                return False
        return True
    raise TypeError(f"unknown sentence: {psi!r}")


_FIXED_SENTENCES = {
    "true": TrueConst(),
    "r2-nonempty": R2NonEmpty(),
    "height-parity-even": HeightParityEven(),
}


def parse_sentence(text: str) -> Sentence:
    """Parse the canonical sentence strings used by configs and the CLI."""
    if text in _FIXED_SENTENCES:
        return _FIXED_SENTENCES[text]
    if text.startswith("height-at-least:"):
        return HeightAtLeast(int(text.split(":", 1)[1]))
    if text.startswith("all-level-bounds:C="):
        return AllLevelBoundsHold(float(text.split("=", 1)[1]))
    raise ValueError(
        f"unknown sentence {text!r}; expected one of: true, r2-nonempty, "
        f"height-parity-even, height-at-least:<c>, all-level-bounds:C=<real>"
    )


def format_sentence(psi: Sentence) -> str:
    if isinstance(psi, TrueConst):
        return "true"
    if isinstance(psi, R2NonEmpty):
        return "r2-nonempty"
    if isinstance(psi, HeightParityEven):
        return "height-parity-even"
    if isinstance(psi, HeightAtLeast):
        return f"height-at-least:{psi.c}"
    if isinstance(psi, AllLevelBoundsHold):
        return f"all-level-bounds:C={psi.slack:g}"
    raise TypeError(f"unknown sentence: {psi!r}")
