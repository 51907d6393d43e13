"""Learning-rate schedule refinement, last-iterate bounds and a convex test bench."""

from .bounds import BoundReport, anyeta_bound, linear_decay_constant, sgd_weighted_bound, tail_identity, tail_upper_bound
from .convex_lab import (
    AbsLipschitz,
    LogisticRegression,
    RunReport,
    Trajectory,
    regret,
    run_adam_like,
    run_sgd,
    run_weighted_ogd,
    scheduled_reduction,
    synthetic_logreg,
)
from .errors import DegenerateNormsError, DivergenceError, DomainError, ParseError
from .libsvm import parse_libsvm
from .refinement import (
    GradientNormLog,
    OptimalWeightsResult,
    RefinementConfig,
    median_filter,
    optimal_weights,
    per_coordinate_weights,
    refine,
)
from .schedule_core import (
    PolyFit,
    Schedule,
    WeightSequence,
    apply_warmup,
    fit_poly,
    make_schedule,
    schedule_to_weights,
    weights_to_schedule,
)

__version__ = "0.1.0"
