"""Monte Carlo experiment harness.

Estimates ``Prob(G_n |= psi)`` over a grid of structure sizes and runs the
quantitative surveys: level-size bounds, R2-valency concentration, and the
height floor.  Every report is a deterministic function of its
:class:`ExperimentConfig` — trial ``t`` at size ``n`` draws from the stream
``(master_seed, "n", n, "trial", t)``, and aggregation is keyed by trial
index, so results do not depend on worker count or execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .interpretation import (
    AllLevelBoundsHold,
    AllRoots,
    LevelOrder,
    RootPolicy,
    SampleRoots,
    Sentence,
    arithmetic_segment,
    check_arith_segment,
    check_level_order,
    eval_sentence,
    format_root_policy,
    format_sentence,
    parse_root_policy,
    parse_sentence,
)
from .rng import RngStream
from .sampler import (
    AlphaPair,
    ConstantP,
    DeferredDigraph,
    DoubleAlpha,
    DoubleDigraph,
    ModelSpec,
    PowerLaw,
    model_from_json_dict,
    model_to_json_dict,
    sample_model,
)
from .stratification import Stratification, stratify, stratify_summary

__all__ = [
    "ConfigError",
    "OutputSpec",
    "ExperimentConfig",
    "config_from_json_dict",
    "ProbEstimate",
    "wilson_interval",
    "BoundsForN",
    "BoundsReport",
    "ValencyForN",
    "ValencyReport",
    "HeightsForN",
    "HeightSurvey",
    "estimate_prob",
    "verify_level_bounds",
    "valency_survey",
    "height_survey",
    "convergence_table",
    "resolve_roots",
    "trial_stream",
]

# Upper bound on heights for which the arithmetic segment is cross-checked
# inline during surveys; larger segments are quadratic-size objects.
ARITH_CHECK_MAX_HEIGHT = 20


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every violation."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class OutputSpec:
    """Where and how a run's tables are written."""

    path: str
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise ConfigError([f"output.format: must be 'csv' or 'json', got {self.format!r}"])


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment run."""

    model: ModelSpec
    n_grid: tuple[int, ...]
    trials: int
    master_seed: int
    sentence: Optional[Sentence] = None
    slack_c: float = 4.0
    root_policy: RootPolicy = field(default_factory=lambda: SampleRoots(32))
    lazy: bool = False
    workers: int = 1
    output: Optional[OutputSpec] = None

    def __post_init__(self) -> None:
        errors = []
        if self.trials < 1:
            errors.append(f"trials: must be >= 1, got {self.trials}")
        if not self.n_grid:
            errors.append("n_grid: must be nonempty")
        else:
            if any(n < 1 for n in self.n_grid):
                errors.append("n_grid: all node counts must be >= 1")
            if any(a >= b for a, b in zip(self.n_grid, self.n_grid[1:])):
                errors.append("n_grid: must be strictly increasing")
        if self.slack_c < 1.0:
            errors.append(f"slack_c: must be >= 1, got {self.slack_c}")
        if self.workers < 1:
            errors.append(f"workers: must be >= 1, got {self.workers}")
        if errors:
            raise ConfigError(errors)

    @property
    def pair(self) -> Optional[AlphaPair]:
        return self.model.pair if isinstance(self.model, DoubleAlpha) else None

    def to_json_dict(self) -> dict:
        return {
            "model": model_to_json_dict(self.model),
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "sentence": format_sentence(self.sentence) if self.sentence else None,
            "slack_c": self.slack_c,
            "root_policy": format_root_policy(self.root_policy),
            "lazy": self.lazy,
            "workers": self.workers,
            "output": (
                {"path": self.output.path, "format": self.output.format}
                if self.output
                else None
            ),
        }


def config_from_json_dict(d: dict) -> ExperimentConfig:
    """Build a config from its JSON form, reporting every violation with its
    field path."""
    errors = []
    kwargs: dict = {}

    if "model" not in d:
        errors.append("model: required")
    else:
        try:
            kwargs["model"] = model_from_json_dict(d["model"])
        except (ValueError, KeyError, TypeError) as exc:
            errors.append(f"model: {exc}")
    for req, caster in (("n_grid", lambda v: tuple(int(x) for x in v)),
                        ("trials", int), ("master_seed", int)):
        if req not in d:
            errors.append(f"{req}: required")
        else:
            try:
                kwargs[req] = caster(d[req])
            except (ValueError, TypeError) as exc:
                errors.append(f"{req}: {exc}")
    if d.get("sentence") is not None:
        try:
            kwargs["sentence"] = parse_sentence(d["sentence"])
        except ValueError as exc:
            errors.append(f"sentence: {exc}")
    if "slack_c" in d:
        kwargs["slack_c"] = float(d["slack_c"])
    if "root_policy" in d:
        try:
            kwargs["root_policy"] = parse_root_policy(d["root_policy"])
        except ValueError as exc:
            errors.append(f"root_policy: {exc}")
    for key, caster in (("lazy", bool), ("workers", int)):
        if key in d:
            kwargs[key] = caster(d[key])
    if d.get("output") is not None:
        try:
            kwargs["output"] = OutputSpec(
                str(d["output"]["path"]), str(d["output"].get("format", "csv"))
            )
        except (ConfigError, KeyError, TypeError) as exc:
            errors.append(f"output: {exc}")
    unknown = set(d) - {
        "model", "n_grid", "trials", "master_seed", "sentence",
        "slack_c", "root_policy", "lazy", "workers", "output",
    }
    if unknown:
        errors.append(f"unknown fields: {', '.join(sorted(unknown))}")
    if errors:
        raise ConfigError(errors)
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc


# ---------------------------------------------------------------------------
# Estimates


_WILSON_Z = 1.959963984540054  # 97.5% normal quantile: 95% two-sided interval


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion.  Always contains
    the point estimate ``successes / trials``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (0 <= successes <= trials):
        raise ValueError(f"successes {successes} outside 0..{trials}")
    z = _WILSON_Z
    p_hat = successes / trials
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p_hat * (1 - p_hat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class ProbEstimate:
    """Monte Carlo estimate of a satisfaction probability at one ``n``."""

    n: int
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.ci_low <= self.p_hat <= self.ci_high <= 1.0):
            raise ValueError(
                f"estimate out of order: {self.ci_low}, {self.p_hat}, {self.ci_high}"
            )

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    @classmethod
    def from_counts(cls, n: int, trials: int, successes: int) -> "ProbEstimate":
        lo, hi = wilson_interval(successes, trials)
        return cls(n, trials, successes, successes / trials, lo, hi)


# ---------------------------------------------------------------------------
# Shared trial machinery


def trial_stream(master_seed: int, n: int, t: int) -> RngStream:
    """The stream owned by trial ``t`` at grid point ``n``.  Public so that
    single-structure tools can reproduce exactly what an experiment saw."""
    return RngStream(master_seed).child("n", n, "trial", t)


def _trial_stream(cfg: ExperimentConfig, n: int, t: int) -> RngStream:
    return trial_stream(cfg.master_seed, n, t)


def resolve_roots(policy: RootPolicy, n: int, stream: RngStream) -> tuple[int, ...]:
    """Concrete root set for a policy: all nodes, or a sorted uniform sample
    without replacement (all nodes when the request covers them)."""
    if isinstance(policy, AllRoots) or policy.r >= n:
        return tuple(range(1, n + 1))
    gen = stream.generator()
    picked = gen.choice(n, size=policy.r, replace=False) + 1
    return tuple(sorted(picked.tolist()))


def _map_indexed(fn: Callable[[int], object], count: int, workers: int) -> list:
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _require_double_alpha(cfg: ExperimentConfig, what: str) -> AlphaPair:
    if not isinstance(cfg.model, DoubleAlpha):
        raise ValueError(f"{what} requires the double-alpha model")
    return cfg.model.pair


def _sentence_roots(
    cfg: ExperimentConfig, psi: Sentence, n: int, stream: RngStream
) -> Optional[tuple[int, ...]]:
    """Roots for height-based sentences: the sentence's own policy when set,
    else the config's.  ``None`` means evaluate over all nodes."""
    policy = getattr(psi, "root_policy", None) or cfg.root_policy
    if isinstance(policy, AllRoots):
        return None
    return resolve_roots(policy, n, stream.child("roots"))


def estimate_prob(cfg: ExperimentConfig) -> list[ProbEstimate]:
    """Estimate ``Prob(G_n |= sentence)`` at every grid point.

    Sentence evaluation is over eagerly sampled structures (global
    properties like R2-nonemptiness need the whole structure); the deferred
    oracle participates through the stratification surveys instead.
    """
    if cfg.sentence is None:
        raise ValueError("estimate_prob requires a sentence")
    psi = cfg.sentence
    out = []
    for n in cfg.n_grid:
        def trial(t: int, n: int = n) -> bool:
            stream = _trial_stream(cfg, n, t)
            g = sample_model(cfg.model, n, stream.child("structure"))
            roots = None
            if isinstance(g, DoubleDigraph):
                roots = _sentence_roots(cfg, psi, n, stream)
            return eval_sentence(g, psi, pair=cfg.pair, roots=roots)

        successes = sum(_map_indexed(trial, cfg.trials, cfg.workers))
        out.append(ProbEstimate.from_counts(n, cfg.trials, int(successes)))
    return out


def convergence_table(cfg: ExperimentConfig) -> list[ProbEstimate]:
    """Per-grid-point estimates for convergence inspection.  Requires at
    least three grid points so a trend is visible."""
    if cfg.sentence is None:
        raise ValueError("convergence_table requires a sentence")
    if len(cfg.n_grid) < 3:
        raise ValueError("convergence_table requires an n_grid with >= 3 points")
    return estimate_prob(cfg)


# ---------------------------------------------------------------------------
# Level-bound verification


@dataclass(frozen=True)
class BoundsForN:
    """Per-``n`` slice of a bounds report.

    Level sizes of all stratifications are kept concatenated
    (``sizes_concat[offsets[i]:offsets[i+1]]`` belongs to stratification
    ``i``); rows for serialization are generated from them on demand.
    """

    n: int
    trials: int
    bound_c1: float
    bound_cc: float
    threshold_mid: float
    trial_ids: np.ndarray
    root_ids: np.ndarray
    offsets: np.ndarray
    sizes_concat: np.ndarray
    trial_fully_within_cc: np.ndarray
    trial_fully_within_c1: np.ndarray
    positive_height_fraction: float
    level_order_checks: int
    arith_checks: int

    @property
    def frac_within_cc(self) -> float:
        return float(self.trial_fully_within_cc.mean())

    @property
    def frac_within_c1(self) -> float:
        return float(self.trial_fully_within_c1.mean())

    @property
    def c1_violation_rate(self) -> float:
        return 1.0 - self.frac_within_c1

    def iter_rows(self) -> Iterator[tuple]:
        for i in range(self.trial_ids.size):
            sizes = self.sizes_concat[self.offsets[i] : self.offsets[i + 1]]
            trial = int(self.trial_ids[i])
            root = int(self.root_ids[i])
            for k, size in enumerate(sizes.tolist()):
                yield (
                    self.n,
                    trial,
                    root,
                    k,
                    size,
                    self.bound_c1,
                    self.bound_cc,
                    self.threshold_mid,
                    size <= self.bound_cc,
                )


@dataclass(frozen=True)
class BoundsReport:
    pair: AlphaPair
    slack: float
    per_n: tuple[BoundsForN, ...]

    def iter_rows(self) -> Iterator[tuple]:
        for block in self.per_n:
            yield from block.iter_rows()


def _interp_checks(summary, heights_seen: set[int]) -> tuple[int, int]:
    """Inline interpretation soundness checks for one stratification: the
    level order is certified always; the arithmetic segment is cross-checked
    once per distinct small height."""
    order = LevelOrder(summary.height, tuple(int(w) for w in summary.witness_mins()))
    check_level_order(order, summary)
    arith = 0
    if summary.height <= ARITH_CHECK_MAX_HEIGHT and summary.height not in heights_seen:
        heights_seen.add(summary.height)
        check_arith_segment(arithmetic_segment(summary.to_stratification()))
        arith = 1
    return 1, arith


def _strat_records(
    cfg: ExperimentConfig, n: int, t: int
) -> tuple[list[np.ndarray], list[int], int, int]:
    """One trial's stratifications: per-root level-size arrays plus
    interpretation-check counts."""
    stream = _trial_stream(cfg, n, t)
    pair = cfg.model.pair
    if cfg.lazy:
        structure = DeferredDigraph.from_alpha(n, pair, stream.child("structure"))
    else:
        structure = sample_model(cfg.model, n, stream.child("structure"))
    roots = resolve_roots(cfg.root_policy, n, stream.child("roots"))
    sizes_per_root: list[np.ndarray] = []
    order_checks = 0
    arith_checks = 0
    heights_seen: set[int] = set()
    for root in roots:
        if isinstance(structure, DoubleDigraph):
            summary = stratify_summary(structure, root)
        else:
            strat = stratify(structure, root)
            summary = _summary_from_stratification(strat, n)
        sizes_per_root.append(summary.sizes.astype(np.int64))
        oc, ac = _interp_checks(summary, heights_seen)
        order_checks += oc
        arith_checks += ac
    return sizes_per_root, list(roots), order_checks, arith_checks


def _summary_from_stratification(s: Stratification, n: int):
    from .stratification import LevelSummary

    node_level = np.full(n + 1, -1, np.int64)
    for k, level in enumerate(s.levels):
        for b in level:
            node_level[b] = k
    return LevelSummary(
        s.root,
        node_level,
        np.asarray([len(level) for level in s.levels], np.int64),
        np.asarray(s.step_kinds, np.int8),
        s.height,
    )


def verify_level_bounds(cfg: ExperimentConfig) -> BoundsReport:
    """Check every level of every policy-selected stratification against the
    size bound ``C * n**(2*alpha2)``, at the configured slack and at C = 1.

    Also records the fraction of stratifications that got past the root
    level (the nonemptiness side of the claim) and certifies the interpreted
    level order of each stratification as it goes.
    """
    pair = _require_double_alpha(cfg, "verify_level_bounds")
    blocks = []
    for n in cfg.n_grid:
        bound_c1 = float(n) ** pair.level_bound_exponent
        bound_cc = cfg.slack_c * bound_c1
        threshold = float(n) ** pair.mid_exponent

        results = _map_indexed(
            lambda t, n=n: _strat_records(cfg, n, t), cfg.trials, cfg.workers
        )
        trial_ids, root_ids, all_sizes = [], [], []
        within_cc = np.ones(cfg.trials, dtype=bool)
        within_c1 = np.ones(cfg.trials, dtype=bool)
        positive = 0
        total_strats = 0
        order_checks = 0
        arith_checks = 0
        for t, (sizes_per_root, roots, oc, ac) in enumerate(results):
            order_checks += oc
            arith_checks += ac
            for sizes, root in zip(sizes_per_root, roots):
                trial_ids.append(t)
                root_ids.append(root)
                all_sizes.append(sizes)
                total_strats += 1
                if sizes.size > 1:
                    positive += 1
                mx = int(sizes.max())
                if mx > bound_cc:
                    within_cc[t] = False
                if mx > bound_c1:
                    within_c1[t] = False
        offsets = np.zeros(len(all_sizes) + 1, np.int64)
        np.cumsum([s.size for s in all_sizes], out=offsets[1:])
        blocks.append(
            BoundsForN(
                n=n,
                trials=cfg.trials,
                bound_c1=bound_c1,
                bound_cc=bound_cc,
                threshold_mid=threshold,
                trial_ids=np.asarray(trial_ids, np.int64),
                root_ids=np.asarray(root_ids, np.int64),
                offsets=offsets,
                sizes_concat=(
                    np.concatenate(all_sizes) if all_sizes else np.empty(0, np.int64)
                ),
                trial_fully_within_cc=within_cc,
                trial_fully_within_c1=within_c1,
                positive_height_fraction=positive / max(1, total_strats),
                level_order_checks=order_checks,
                arith_checks=arith_checks,
            )
        )
    return BoundsReport(pair=pair, slack=cfg.slack_c, per_n=tuple(blocks))


# ---------------------------------------------------------------------------
# Valency survey


@dataclass(frozen=True)
class ValencyForN:
    n: int
    trials: int
    mean_deg2: float
    target: float
    band_lo: float
    band_hi: float
    frac_in_band: float


@dataclass(frozen=True)
class ValencyReport:
    pair: AlphaPair
    per_n: tuple[ValencyForN, ...]

    def iter_rows(self) -> Iterator[tuple]:
        for v in self.per_n:
            yield (v.n, v.trials, v.mean_deg2, v.target, v.band_lo, v.band_hi, v.frac_in_band)


def valency_survey(cfg: ExperimentConfig) -> ValencyReport:
    """R2 out-degree concentration: mean degree against the binomial mean,
    and the fraction of nodes inside the band ``[target/4, 4*target]`` where
    ``target = n**alpha2``.  Structures are sampled eagerly (degrees need
    every cell of the relation)."""
    pair = _require_double_alpha(cfg, "valency_survey")
    blocks = []
    for n in cfg.n_grid:
        target = float(n) ** pair.alpha2
        band_lo, band_hi = target / 4.0, 4.0 * target

        def trial(t: int, n: int = n) -> tuple[int, int]:
            stream = _trial_stream(cfg, n, t)
            g = sample_model(cfg.model, n, stream.child("structure"))
            degs = g.out_degrees(2)
            in_band = int(np.count_nonzero((degs >= band_lo) & (degs <= band_hi)))
            return int(degs.sum()), in_band

        results = _map_indexed(trial, cfg.trials, cfg.workers)
        total_deg = sum(r[0] for r in results)
        total_in_band = sum(r[1] for r in results)
        node_count = cfg.trials * n
        blocks.append(
            ValencyForN(
                n=n,
                trials=cfg.trials,
                mean_deg2=total_deg / node_count,
                target=target,
                band_lo=band_lo,
                band_hi=band_hi,
                frac_in_band=total_in_band / node_count,
            )
        )
    return ValencyReport(pair=pair, per_n=tuple(blocks))


# ---------------------------------------------------------------------------
# Height survey


@dataclass(frozen=True)
class HeightsForN:
    n: int
    floor_loglog: Optional[float]
    heights: np.ndarray  # per trial

    @property
    def median_height(self) -> float:
        return float(np.median(self.heights))

    @property
    def frac_meeting_floor(self) -> Optional[float]:
        if self.floor_loglog is None:
            return None
        return float(np.mean(self.heights >= self.floor_loglog))


@dataclass(frozen=True)
class HeightSurvey:
    pair: AlphaPair
    per_n: tuple[HeightsForN, ...]

    def iter_rows(self) -> Iterator[tuple]:
        for block in self.per_n:
            for t, h in enumerate(block.heights.tolist()):
                meets = None if block.floor_loglog is None else h >= block.floor_loglog
                yield (block.n, t, h, block.floor_loglog, meets)


def height_survey(cfg: ExperimentConfig) -> HeightSurvey:
    """Height of each sampled structure over the policy-selected roots, per
    trial, with the ``log2(log2(n))`` floor tabulated for ``n >= 2``."""
    pair = _require_double_alpha(cfg, "height_survey")
    blocks = []
    for n in cfg.n_grid:
        def trial(t: int, n: int = n) -> int:
            stream = _trial_stream(cfg, n, t)
            if cfg.lazy:
                structure = DeferredDigraph.from_alpha(n, pair, stream.child("structure"))
            else:
                structure = sample_model(cfg.model, n, stream.child("structure"))
            roots = resolve_roots(cfg.root_policy, n, stream.child("roots"))
            if isinstance(structure, DoubleDigraph):
                return max(stratify_summary(structure, a).height for a in roots)
            return max(stratify(structure, a).height for a in roots)

        heights = np.asarray(_map_indexed(trial, cfg.trials, cfg.workers), np.int64)
        floor = math.log2(math.log2(n)) if n >= 2 else None
        blocks.append(HeightsForN(n=n, floor_loglog=floor, heights=heights))
    return HeightSurvey(pair=pair, per_n=tuple(blocks))
