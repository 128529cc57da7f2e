"""stratlab: a simulation laboratory for sparse random double digraphs.

Samples the random structures, stratifies them level by level from a root,
interprets a linear order and an arithmetic initial segment on the levels,
and estimates sentence satisfaction probabilities by Monte Carlo over a grid
of structure sizes.
"""

from .rng import RngStream
from .sampler import (
    AlphaPair,
    ConstantP,
    DeferredDigraph,
    DoubleAlpha,
    DoubleDigraph,
    EagerOracle,
    Graph,
    ModelSpec,
    PowerLaw,
    edge_probability,
    open_deferred,
    reveal_out,
    sample_double_digraph,
    sample_gnp,
    sample_model,
    sample_power_law_graph,
    wrap_eager,
)
from .stratification import (
    BiRelationalView,
    FormulaView,
    Stratification,
    adjacency_view,
    brute_stratify,
    height_of_graph,
    height_of_node,
    height_of_sample,
    stratify,
)
from .interpretation import (
    AllLevelBoundsHold,
    AllRoots,
    ArithSegment,
    HeightAtLeast,
    HeightParityEven,
    LevelOrder,
    R2NonEmpty,
    RootPolicy,
    SampleRoots,
    Sentence,
    SentenceContextError,
    TrueConst,
    arithmetic_segment,
    build_level_order,
    eval_sentence,
    format_sentence,
    level_compare,
    level_of,
    parse_sentence,
)
from .experiment import (
    BoundsReport,
    ConfigError,
    ExperimentConfig,
    HeightSurvey,
    OutputSpec,
    ProbEstimate,
    ValencyReport,
    convergence_table,
    estimate_prob,
    height_survey,
    valency_survey,
    verify_level_bounds,
    wilson_interval,
)

__version__ = "0.1.0"
