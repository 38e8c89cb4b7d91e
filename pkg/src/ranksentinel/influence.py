"""Per-case influence scores and candidate influential-point flagging.

The influence of deleting case i is the sum over the selected features of
the squared difference between the weighted original rank and the weighted
leave-one-out rank. Scores are standardized by their standard deviation
for presentation, and the case with the largest score is flagged as a
candidate when it sits a clear gap above the runner-up. Leave-one-out can
only attribute influence to a single case per run, so at most one case is
ever flagged, and the flag is an indication to investigate, not a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStatisticsError, ValidationError
from .ranker import LooRankingSet
from .weights import WeightModel, weight

DEFAULT_GAP_THRESHOLD = 1.0


@dataclass(frozen=True)
class InfluenceReport:
    """Scores for every deletion plus the gap diagnostic for the top case."""

    case_ids: tuple[str, ...]
    raw_scores: np.ndarray
    std_scores: np.ndarray
    flagged_index: int
    gap: float
    runner_up_gap: float
    is_candidate: bool
    possible_multiplicity: bool
    kappa_used: float | None
    m: int
    method: str = "adaptive"
    centered: bool = False

    @property
    def flagged_case_id(self) -> str:
        return self.case_ids[self.flagged_index]

    @property
    def flagged_position(self) -> int:
        """1-based observation position of the flagged case."""
        return self.flagged_index + 1


def total_rank_change(model: WeightModel, original_ranks, loo_ranks) -> float:
    """Sum of squared weighted-rank differences for one deletion.

    ``original_ranks`` and ``loo_ranks`` must cover the same features in
    the same order; unchanged positions contribute exactly zero.
    """
    orig = np.asarray(original_ranks, dtype=np.int64)
    loo = np.asarray(loo_ranks, dtype=np.int64)
    if orig.shape != loo.shape:
        raise ValidationError(
            f"rank vectors cover different feature sets: {orig.shape} vs {loo.shape}"
        )
    diff = weight(model, orig) - weight(model, loo)
    return float(np.sum(diff * diff))


def case_scores(model: WeightModel, loo_set: LooRankingSet) -> np.ndarray:
    """Total weighted rank change per deleted case, in case order."""
    orig = np.arange(1, loo_set.original.m + 1, dtype=np.int64)
    return np.array(
        [total_rank_change(model, orig, row) for row in loo_set.loo_ranks], dtype=np.float64
    )


def standardize(scores, center: bool = False) -> np.ndarray:
    """Divide by the sample standard deviation; optional mean-centering
    turns the result into z-scores."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size < 2:
        raise DegenerateStatisticsError("need at least 2 scores to standardize")
    sd = float(arr.std(ddof=1))
    if sd == 0.0:
        raise DegenerateStatisticsError("scores have zero standard deviation")
    if center:
        return (arr - arr.mean()) / sd
    return arr / sd


def detect_ip(
    case_ids,
    raw_scores,
    kappa_used: float | None,
    m: int,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    center: bool = False,
    method: str = "adaptive",
) -> InfluenceReport:
    """Flag the arg-max case and judge the gap separating it from the rest.

    The gap statistic g = (max - second max) / sd(scores) is a numeric
    stand-in for reading the score plot: g >= ``gap_threshold`` labels the
    case a candidate influential point. When the top two scores are close
    but both stand clear of the third, the report notes that several
    influential points may be present (one run can only flag one).
    """
    case_ids = tuple(case_ids)
    raw = np.asarray(raw_scores, dtype=np.float64)
    if raw.size != len(case_ids):
        raise ValidationError("one score per case id is required")
    if raw.size < 3:
        raise ValidationError("influence detection needs at least 3 cases")
    std = standardize(raw, center=center)

    order = np.argsort(raw, kind="stable")
    top, second, third = raw[order[-1]], raw[order[-2]], raw[order[-3]]
    sd = float(raw.std(ddof=1))
    gap = float((top - second) / sd)
    runner_up_gap = float((second - third) / sd)
    flagged = int(np.flatnonzero(raw == top)[0])

    is_candidate = gap >= gap_threshold
    multiplicity = (not is_candidate) and runner_up_gap >= gap_threshold
    return InfluenceReport(
        case_ids=case_ids,
        raw_scores=raw,
        std_scores=std,
        flagged_index=flagged,
        gap=gap,
        runner_up_gap=runner_up_gap,
        is_candidate=is_candidate,
        possible_multiplicity=multiplicity,
        kappa_used=kappa_used,
        m=m,
        method=method,
        centered=center,
    )


def adaptive_report(
    model: WeightModel,
    loo_set: LooRankingSet,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    center: bool = False,
) -> InfluenceReport:
    """Score every deletion under ``model`` and flag the candidate."""
    scores = case_scores(model, loo_set)
    return detect_ip(
        loo_set.case_ids,
        scores,
        kappa_used=model.kappa,
        m=model.m,
        gap_threshold=gap_threshold,
        center=center,
        method="adaptive",
    )
