"""Differentially private data depth: values, medians, and rank tests."""

from .data import (
    Dataset,
    DirectionSet,
    InputError,
    PrivacyParams,
    ProjectedSample,
    RandomSource,
    empirical_quantile,
    load_dataset,
    project,
    sample_directions,
    sample_iqr,
    sample_mad,
    sample_median,
)
from .depth import (
    DepthKind,
    depth_batch,
    depth_vector,
    evaluate_depth,
    halfspace_depth,
    irw_depth,
    outlyingness,
    projection_depth,
    simplicial_depth,
)
from .estimators import (
    PrivateDepthReport,
    RankSumTestReport,
    TruncatedOutlyingnessSpec,
    default_eta,
    private_depth_median_exp,
    private_depth_point,
    private_depth_vector,
    private_projection_depth,
    private_projection_median_ptr,
    private_rank_sum_scale_test,
    rank_sum_scale_test,
    ranks_by_count,
)
from .mechanisms import (
    BOTTOM,
    BudgetExceeded,
    BudgetLedger,
    CandidateGrid,
    GridError,
    LedgerEntry,
    MechanismOutcome,
    Prior,
    compose_advanced,
    compose_basic,
    exponential_mechanism_discrete,
    exponential_weights,
    gaussian_mechanism,
    laplace_mechanism,
    ptr,
    ptr_exponential,
)
from .sensitivity import (
    OutlyingnessInterval,
    SensitivityBound,
    breakdown_holds,
    global_sensitivity,
    outlyingness_interval,
    vector_global_sensitivity,
)

__version__ = "0.1.0"

__all__ = [
    "BOTTOM",
    "BudgetExceeded",
    "BudgetLedger",
    "CandidateGrid",
    "Dataset",
    "DepthKind",
    "DirectionSet",
    "GridError",
    "InputError",
    "LedgerEntry",
    "MechanismOutcome",
    "OutlyingnessInterval",
    "Prior",
    "PrivacyParams",
    "PrivateDepthReport",
    "ProjectedSample",
    "RandomSource",
    "RankSumTestReport",
    "SensitivityBound",
    "TruncatedOutlyingnessSpec",
    "breakdown_holds",
    "compose_advanced",
    "compose_basic",
    "default_eta",
    "depth_batch",
    "depth_vector",
    "empirical_quantile",
    "evaluate_depth",
    "exponential_mechanism_discrete",
    "exponential_weights",
    "gaussian_mechanism",
    "global_sensitivity",
    "halfspace_depth",
    "irw_depth",
    "laplace_mechanism",
    "load_dataset",
    "outlyingness",
    "outlyingness_interval",
    "private_depth_median_exp",
    "private_depth_point",
    "private_depth_vector",
    "private_projection_depth",
    "private_projection_median_ptr",
    "private_rank_sum_scale_test",
    "project",
    "projection_depth",
    "ptr",
    "ptr_exponential",
    "rank_sum_scale_test",
    "ranks_by_count",
    "sample_directions",
    "sample_iqr",
    "sample_mad",
    "sample_median",
    "simplicial_depth",
    "vector_global_sensitivity",
]
