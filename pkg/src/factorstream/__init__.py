"""Reactive message passing for Bayesian inference on factor graphs.

Models are terminated Forney-style factor graphs: variables are edges,
factors are nodes, and inference runs by exchanging distribution-valued
messages on reactive streams with no precomputed schedule.  Local
factorization and form constraints select between sum-product, variational,
and moment-matching update rules, all minimizing a constrained Bethe free
energy.
"""

from . import rules  # noqa: F401  (registers node kinds and update rules)
from .algebra import (
    from_json,
    moment_match_gaussian,
    multiply_and_normalize,
    to_json,
)
from .bench import RunReport, averaged_bfe_by_iteration, benchmark, infer, infer_hgf, infer_hmm, infer_lgssm
from .distributions import (
    Bernoulli,
    Beta,
    Categorical,
    CategoricalJoint,
    Dirichlet,
    Gamma,
    Gaussian1D,
    GaussianND,
    MatrixDirichlet,
    PointMass,
    SampleGrid,
    entropy,
    expectation_log,
    log_pdf,
    mean,
    mode,
    precision,
    variance,
)
from .engine import BfeUpdate, InferenceEngine, MarginalUpdate, logger_stage, moment_matching_stage
from .graph import (
    ModelGraph,
    NodeContext,
    full_joint,
    mean_field,
    structured,
    validate,
)
from .metrics import average_error
from .models import build_coin, build_hgf, build_hmm, build_lgssm, build_model_from_config
from .quadrature import gauss_hermite_expectation, gauss_hermite_moments
from .simulate import Dataset, simulate
from .streams import (
    EventLoop,
    StreamHandle,
    Subject,
    Subscription,
    combine_latest,
    map_stream,
    subscribe,
    sum_latest,
)

__all__ = [
    "Bernoulli", "Beta", "BfeUpdate", "Categorical", "CategoricalJoint",
    "Dataset", "Dirichlet", "EventLoop", "Gamma", "Gaussian1D", "GaussianND",
    "InferenceEngine", "MarginalUpdate", "MatrixDirichlet", "ModelGraph",
    "NodeContext", "PointMass", "RunReport", "SampleGrid", "StreamHandle",
    "Subject", "Subscription", "average_error", "averaged_bfe_by_iteration",
    "benchmark", "build_coin", "build_hgf", "build_hmm", "build_lgssm",
    "build_model_from_config", "combine_latest", "entropy", "expectation_log",
    "from_json", "full_joint", "gauss_hermite_expectation",
    "gauss_hermite_moments", "infer", "infer_hgf", "infer_hmm", "infer_lgssm",
    "log_pdf", "logger_stage", "map_stream", "mean", "mean_field", "mode",
    "moment_match_gaussian", "moment_matching_stage", "multiply_and_normalize",
    "precision", "rules", "simulate", "structured", "subscribe", "sum_latest",
    "to_json", "validate", "variance",
]
