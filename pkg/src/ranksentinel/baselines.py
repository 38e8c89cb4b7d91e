"""Classical rank-distance baselines and fixed top-prioritized weight schemes.

Because every comparison here is between equal-length rank lists, the
usual correlation denominators cancel and plain squared-difference
distances are reported instead:

    spearman          D_s = sum (R_i - Q_i)^2
    weighted spearman D_w = sum (R_i - Q_i)^2 * ((m - R_i + 1) + (m - Q_i + 1))

The weighted variant's position weights depend only on the two ranks and
the list length, never on the data, which is exactly the limitation the
adaptive weight curve addresses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .influence import InfluenceReport, detect_ip
from .ranker import LooRankingSet

BASELINE_METHODS = ("spearman", "wspearman")
FIXED_WEIGHT_SCHEMES = ("rr", "roc")


@dataclass(frozen=True)
class RankPairList:
    """Two rank lists over the same m features, position-aligned."""

    r: np.ndarray
    q: np.ndarray
    m: int

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.int64)
        q = np.asarray(self.q, dtype=np.int64)
        if r.ndim != 1 or q.ndim != 1:
            raise ValidationError("rank lists must be 1-D")
        if r.shape != q.shape:
            raise ValidationError(f"rank lists differ in length: {r.size} vs {q.size}")
        if r.size and (r.min() < 1 or q.min() < 1):
            raise ValidationError("ranks must be positive integers")
        if self.m < 1:
            raise ValidationError("list length m must be >= 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "q", q)


def spearman_d(pairs: RankPairList) -> float:
    """Unweighted squared rank-difference distance."""
    diff = pairs.r - pairs.q
    return float(np.sum(diff * diff))


def weighted_spearman_d(pairs: RankPairList, warn_on_clamp: bool = True) -> float:
    """Position-weighted squared rank-difference distance.

    The weight term presupposes ranks within 1..m; ranks beyond the list
    window are clamped to m for the weight term only (the squared
    difference keeps the raw ranks).
    """
    diff = (pairs.r - pairs.q).astype(np.float64)
    r_c = np.minimum(pairs.r, pairs.m)
    q_c = np.minimum(pairs.q, pairs.m)
    if warn_on_clamp and (np.any(pairs.r > pairs.m) or np.any(pairs.q > pairs.m)):
        warnings.warn(
            "ranks beyond the list length were clamped to m for the weight term",
            stacklevel=2,
        )
    w = (pairs.m - r_c + 1) + (pairs.m - q_c + 1)
    return float(np.sum(diff * diff * w))


def fixed_weights(scheme: str, n: int) -> np.ndarray:
    """Data-independent top-prioritized weight vector for ranks 1..n.

    ``rr`` is rank reciprocal (1/r). ``roc`` is the rank order centroid
    variant 100 * sum_{i=r..n} 1/i / sum_{i=1..n} 1/i; note this follows
    the source formulation used here, which differs from the classical
    centroid weights (1/n) * sum_{i=r..n} 1/i.
    """
    if n < 1:
        raise ValidationError(f"need n >= 1 ranks, got {n}")
    ranks = np.arange(1, n + 1, dtype=np.float64)
    if scheme == "rr":
        return 1.0 / ranks
    if scheme == "roc":
        inv = 1.0 / ranks
        tail_sums = np.cumsum(inv[::-1])[::-1]
        return 100.0 * tail_sums / inv.sum()
    raise ValidationError(f"unknown fixed-weight scheme {scheme!r} (expected {FIXED_WEIGHT_SCHEMES})")


def per_case_distances(method: str, loo_set: LooRankingSet) -> np.ndarray:
    """Distance between the original ranking and each leave-one-out ranking."""
    if method not in BASELINE_METHODS:
        raise ValidationError(f"unknown baseline method {method!r} (expected {BASELINE_METHODS})")
    m = loo_set.original.m
    orig = np.arange(1, m + 1, dtype=np.int64)
    out = np.empty(loo_set.n_cases, dtype=np.float64)
    clamped = False
    for i, row in enumerate(loo_set.loo_ranks):
        pairs = RankPairList(orig, row, m)
        if method == "spearman":
            out[i] = spearman_d(pairs)
        else:
            clamped = clamped or bool(np.any(row > m))
            out[i] = weighted_spearman_d(pairs, warn_on_clamp=False)
    if clamped:
        warnings.warn(
            "some leave-one-out ranks exceed the list length; "
            "they were clamped to m inside the weighted distance",
            stacklevel=2,
        )
    return out


def baseline_influence(
    method: str,
    loo_set: LooRankingSet,
    gap_threshold: float = 1.0,
    center: bool = False,
) -> InfluenceReport:
    """Standardized per-case baseline distances with the arg-max flagged."""
    scores = per_case_distances(method, loo_set)
    return detect_ip(
        loo_set.case_ids,
        scores,
        kappa_used=None,
        m=loo_set.original.m,
        gap_threshold=gap_threshold,
        center=center,
        method=method,
    )
