"""Exponentially decaying rank weights and the data-driven steepness fit.

The weight of rank x in a list of length m is

    w(x) = -(1 - e^kappa) / (1 - e^(-kappa * m)) * e^(-kappa * x)

which is positive, strictly decreasing in x, and sums to exactly 1 over
x = 1..m (geometric series). kappa controls how strongly the top of the
list is prioritized; it is fitted by maximizing an R-squared criterion
over the pooled set of observed rank changes, so the steepness adapts to
how the changes are distributed between head and tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStatisticsError, OptimizationError, ValidationError

DEFAULT_KAPPA_MIN = 1e-6
DEFAULT_KAPPA_MAX = 10.0
DEFAULT_KAPPA_TOL = 1e-8
COARSE_GRID_POINTS = 50

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WeightModel:
    """Parameters of the normalized exponential weight curve."""

    kappa: float
    m: int

    def __post_init__(self):
        if not (self.kappa > 0.0 and np.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be a positive finite real, got {self.kappa}")
        if self.m < 1:
            raise ValidationError(f"list length m must be >= 1, got {self.m}")

    @property
    def normalizer(self) -> float:
        # expm1 keeps the ratio accurate for kappa near zero, where both
        # 1 - e^kappa and 1 - e^(-kappa m) vanish linearly.
        return float(np.expm1(self.kappa) / -np.expm1(-self.kappa * self.m))


def weight(model: WeightModel, x) -> np.ndarray | float:
    """Weight of rank position(s) ``x`` under ``model``.

    Defined for any x >= 1, including positions beyond the truncated list
    length m: those simply receive smaller positive weight. Floating input
    keeps its dtype, so very steep curves can be evaluated in extended
    precision where float64 exp() would underflow.
    """
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    if np.any(arr < 1):
        raise ValidationError("rank positions must be >= 1")
    out = arr.dtype.type(model.normalizer) * np.exp(-arr.dtype.type(model.kappa) * arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class RankChangeSet:
    """Pooled (original rank, leave-one-out rank) pairs where the two differ.

    Pairs are pooled over all n deletions and stored in a canonical sort
    order so that downstream fits do not depend on construction order.
    """

    original_ranks: np.ndarray
    loo_ranks: np.ndarray
    case_indices: np.ndarray
    m: int

    def __post_init__(self):
        orig = np.asarray(self.original_ranks, dtype=np.int64)
        loo = np.asarray(self.loo_ranks, dtype=np.int64)
        cases = np.asarray(self.case_indices, dtype=np.int64)
        if not (orig.shape == loo.shape == cases.shape) or orig.ndim != 1:
            raise ValidationError("change-set arrays must be 1-D and equally long")
        if self.m < 1:
            raise ValidationError("list length m must be >= 1")
        if orig.size:
            if orig.min() < 1 or orig.max() > self.m:
                raise ValidationError("original ranks must lie in 1..m")
            if loo.min() < 1:
                raise ValidationError("leave-one-out ranks must be >= 1")
            if np.any(orig == loo):
                raise ValidationError("change set may only contain pairs whose ranks differ")
        order = np.lexsort((loo, orig, cases))
        object.__setattr__(self, "original_ranks", orig[order])
        object.__setattr__(self, "loo_ranks", loo[order])
        object.__setattr__(self, "case_indices", cases[order])

    def __len__(self) -> int:
        return int(self.original_ranks.size)

    @classmethod
    def from_loo(cls, loo_set) -> "RankChangeSet":
        """Pool the changed-rank pairs of a :class:`ranker.LooRankingSet`."""
        m = loo_set.original.m
        orig = np.arange(1, m + 1, dtype=np.int64)
        chunks_o, chunks_l, chunks_c = [], [], []
        for i, row in enumerate(loo_set.loo_ranks):
            mask = row != orig
            if mask.any():
                chunks_o.append(orig[mask])
                chunks_l.append(row[mask])
                chunks_c.append(np.full(int(mask.sum()), i, dtype=np.int64))
        if chunks_o:
            return cls(
                np.concatenate(chunks_o),
                np.concatenate(chunks_l),
                np.concatenate(chunks_c),
                m,
            )
        return cls(
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            m,
        )


def r_squared(changes: RankChangeSet, kappa: float) -> float:
    """Similarity between weighted original and leave-one-out ranks.

    Treating the weighted leave-one-out ranks as observed responses and
    the weighted original ranks as predictions, returns

        1 - sum((pred - obs)^2) / sum((obs - mean(obs))^2)

    with both sums running over the pooled change set.
    """
    if len(changes) == 0:
        raise DegenerateStatisticsError("change set is empty; no rank changes to fit")
    if np.unique(changes.loo_ranks).size < 2:
        raise DegenerateStatisticsError(
            "observed leave-one-out ranks are all equal; similarity criterion undefined"
        )
    model = WeightModel(kappa=kappa, m=changes.m)
    observed = weight(model, changes.loo_ranks)
    predicted = weight(model, changes.original_ranks)
    sse = float(np.sum((predicted - observed) ** 2))
    sst = float(np.sum((observed - observed.mean()) ** 2))
    if sst == 0.0:
        # distinct ranks can still collide in float64 at extreme steepness
        raise DegenerateStatisticsError(
            "observed weighted ranks are numerically indistinguishable at this kappa"
        )
    return 1.0 - sse / sst


def fit_kappa(
    changes: RankChangeSet,
    lo: float = DEFAULT_KAPPA_MIN,
    hi: float = DEFAULT_KAPPA_MAX,
    tol: float = DEFAULT_KAPPA_TOL,
) -> WeightModel:
    """Steepness that maximizes :func:`r_squared` over ``[lo, hi]``.

    A 50-point log-spaced scan picks the bracketing cell, then a
    golden-section refinement on log(kappa) narrows it to ``tol``.
    The lower bound must stay strictly positive: at kappa = 0 weights
    degenerate to the equal value 1/m and the criterion is undefined.
    """
    if not (0.0 < lo < hi):
        raise ValidationError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
    if not tol > 0.0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    if len(changes) == 0:
        raise DegenerateStatisticsError("change set is empty; cannot fit kappa")

    def objective(log_k: float) -> float:
        try:
            return r_squared(changes, float(np.exp(log_k)))
        except DegenerateStatisticsError:
            return -np.inf

    grid = np.linspace(np.log(lo), np.log(hi), COARSE_GRID_POINTS)
    values = np.array([objective(u) for u in grid])
    if not np.any(np.isfinite(values)):
        raise OptimizationError("objective undefined over the whole bracket")
    best = int(np.argmax(values))

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, COARSE_GRID_POINTS - 1)]
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    log_best = (a + b) / 2.0
    if not np.isfinite(objective(log_best)):
        raise OptimizationError("golden-section refinement left the feasible region")
    return WeightModel(kappa=float(np.exp(log_best)), m=changes.m)
