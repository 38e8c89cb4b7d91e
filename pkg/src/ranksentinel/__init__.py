"""Influential-point detection for feature rankings.

Deleting one sample at a time and re-ranking the features turns ranking
instability into a per-case score: the total weighted rank change a
deletion causes. An exponentially decaying weight curve, fitted to the
observed distribution of rank changes, keeps the focus on the top of the
list where rankings matter most.
"""

__version__ = "0.1.0"

from .baselines import (
    RankPairList,
    baseline_influence,
    fixed_weights,
    spearman_d,
    weighted_spearman_d,
)
from .errors import (
    DegenerateStatisticsError,
    OptimizationError,
    RankSentinelError,
    ValidationError,
)
from .influence import (
    InfluenceReport,
    adaptive_report,
    case_scores,
    detect_ip,
    standardize,
    total_rank_change,
)
from .ingest import (
    ExpressionMatrix,
    balance_groups,
    cpm_normalize,
    drop_excluded,
    filter_low_expressed,
    load_matrix,
    write_matrix,
)
from .ranker import LooRankingSet, Ranking, loo_rankings, loo_t_stats, t_rank
from .synth import SyntheticSpec, generate_matrix
from .weights import RankChangeSet, WeightModel, fit_kappa, r_squared, weight

__all__ = [
    "DegenerateStatisticsError",
    "ExpressionMatrix",
    "InfluenceReport",
    "LooRankingSet",
    "OptimizationError",
    "RankChangeSet",
    "RankPairList",
    "RankSentinelError",
    "Ranking",
    "SyntheticSpec",
    "ValidationError",
    "WeightModel",
    "adaptive_report",
    "balance_groups",
    "baseline_influence",
    "case_scores",
    "cpm_normalize",
    "detect_ip",
    "drop_excluded",
    "filter_low_expressed",
    "fit_kappa",
    "fixed_weights",
    "generate_matrix",
    "load_matrix",
    "loo_rankings",
    "loo_t_stats",
    "r_squared",
    "spearman_d",
    "standardize",
    "t_rank",
    "total_rank_change",
    "weight",
    "weighted_spearman_d",
    "write_matrix",
]
