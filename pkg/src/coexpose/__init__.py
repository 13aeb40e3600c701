"""Diversity-exposure maximization on social graphs.

Select up to k (node, item) seed pairs, at most k_u per node, so that the
expected sum over nodes of the leaning range each node gets exposed to is
maximized under an item-aware independent cascade.  Selection runs on
sampled reverse co-exposure sets with provable-accuracy sample sizes.
"""

from .baselines import baseline_close, baseline_far, baseline_weight
from .errors import (
    CoexposeError,
    ConfigError,
    ParseError,
    ResourceLimitError,
    ValidationError,
)
from .model import (
    Assignment,
    AssignmentStats,
    ConstraintSet,
    EdgeProbabilities,
    FeasibilityResult,
    ItemCatalog,
    LeaningSpan,
    PropagationModel,
    SocialGraph,
    assignment_stats,
    check_feasible,
    diversity_level,
    edge_probability,
    span_gain,
)
from .optimize import (
    GreedyTrace,
    TdemParams,
    exact_greedy,
    lambda_bound,
    log_binom,
    naive_lower_bound,
    rc_greedy,
    sampling_phase,
    tdem,
    theta_i,
)
from .rcsets import (
    RcGenerator,
    RcSample,
    RcSet,
    apply_pair,
    build_sample,
    generate_rc_set,
    peek_gain,
    sample_weight,
)
from .reporting import ScoreReport, rescore, run_experiment
from .synth import generate_synthetic
from .worlds import (
    ExposureOutcome,
    McEvaluation,
    PossibleWorld,
    WorldEnsemble,
    enumerate_worlds,
    exact_score,
    mc_evaluate,
    mc_score,
    simulate_cascade,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment", "AssignmentStats", "ConstraintSet", "EdgeProbabilities",
    "FeasibilityResult", "ItemCatalog", "LeaningSpan", "PropagationModel",
    "SocialGraph", "assignment_stats", "check_feasible", "diversity_level",
    "edge_probability", "span_gain",
    "ExposureOutcome", "McEvaluation", "PossibleWorld", "WorldEnsemble",
    "enumerate_worlds", "exact_score", "mc_evaluate", "mc_score",
    "simulate_cascade",
    "RcGenerator", "RcSample", "RcSet", "apply_pair", "build_sample",
    "generate_rc_set", "peek_gain", "sample_weight",
    "GreedyTrace", "TdemParams", "exact_greedy", "lambda_bound", "log_binom",
    "naive_lower_bound", "rc_greedy", "sampling_phase", "tdem", "theta_i",
    "baseline_close", "baseline_far", "baseline_weight",
    "ScoreReport", "rescore", "run_experiment", "generate_synthetic",
    "CoexposeError", "ConfigError", "ParseError", "ResourceLimitError",
    "ValidationError",
    "__version__",
]
