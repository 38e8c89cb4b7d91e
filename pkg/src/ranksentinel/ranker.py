"""Two-sample t-test feature ranking and fast leave-one-out re-rankings.

Features are ordered by ascending two-sided p-value. Ties are broken by
feature id so the ranking is a permutation that never depends on input
order or thread count. The n leave-one-out rankings reuse per-group
sufficient statistics (count, sum, sum of squares, held in extended
precision) and downdate them per deleted sample instead of recomputing
every group mean and variance from scratch.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import ValidationError
from .ingest import ExpressionMatrix

# Downdated variances below this are treated as accumulation error and
# recomputed from scratch; tiny negatives above it are clamped to zero.
NEGATIVE_VARIANCE_FALLBACK = -1e-9

VARIANTS = ("welch", "pooled")


@dataclass(frozen=True)
class Ranking:
    """Top features in rank order (rank = 1-based position) with their scores."""

    feature_ids: tuple[str, ...]
    t_stats: np.ndarray
    p_values: np.ndarray
    variant: str = "welch"
    log_transform: bool = True

    def __post_init__(self):
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        object.__setattr__(self, "t_stats", np.asarray(self.t_stats, dtype=np.float64))
        object.__setattr__(self, "p_values", np.asarray(self.p_values, dtype=np.float64))
        if not (len(self.feature_ids) == self.t_stats.size == self.p_values.size):
            raise ValidationError("feature ids and score arrays must have equal length")

    @property
    def m(self) -> int:
        return len(self.feature_ids)

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, self.m + 1)


@dataclass(frozen=True)
class LooRankingSet:
    """Global leave-one-out ranks of the selected features, one row per deletion.

    Rank values are positions in the full re-ranked feature list, so they
    may exceed the selected list length m.
    """

    original: Ranking
    case_ids: tuple[str, ...]
    loo_ranks: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "case_ids", tuple(self.case_ids))
        object.__setattr__(self, "loo_ranks", np.asarray(self.loo_ranks, dtype=np.int64))
        if self.loo_ranks.shape != (len(self.case_ids), self.original.m):
            raise ValidationError(
                f"loo_ranks shape {self.loo_ranks.shape} does not match "
                f"{len(self.case_ids)} deletions x {self.original.m} features"
            )

    @property
    def n_cases(self) -> int:
        return len(self.case_ids)


def _transformed(x: ExpressionMatrix, log_transform: bool) -> np.ndarray:
    return np.log2(x.values + 1.0) if log_transform else x.values


def _t_and_p(n_a, mean_a, var_a, n_b, mean_b, var_b, variant: str):
    """Vectorized two-sided t-test, case group first.

    Features with zero variance in both groups get t = 0, p = 1 and a
    True entry in the returned degenerate mask.
    """
    mean_a = np.asarray(mean_a, dtype=np.float64)
    mean_b = np.asarray(mean_b, dtype=np.float64)
    var_a = np.asarray(var_a, dtype=np.float64)
    var_b = np.asarray(var_b, dtype=np.float64)
    degenerate = (var_a == 0.0) & (var_b == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant == "welch":
            va, vb = var_a / n_a, var_b / n_b
            se_sq = va + vb
            df = se_sq**2 / (va**2 / (n_a - 1) + vb**2 / (n_b - 1))
        elif variant == "pooled":
            sp_sq = ((n_a - 1) * var_a + (n_b - 1) * var_b) / (n_a + n_b - 2)
            se_sq = sp_sq * (1.0 / n_a + 1.0 / n_b)
            df = np.full_like(se_sq, float(n_a + n_b - 2))
        else:
            raise ValidationError(f"unknown t-test variant {variant!r} (expected {VARIANTS})")
        t = (mean_a - mean_b) / np.sqrt(se_sq)
        p = 2.0 * sps.t.sf(np.abs(t), df)
    t[degenerate] = 0.0
    p[degenerate] = 1.0
    return t, p, degenerate


def _rank_positions(p: np.ndarray, degenerate: np.ndarray, lex_rank: np.ndarray) -> np.ndarray:
    """1-based global rank per feature: ascending p, degenerates after all
    finite results, remaining ties by feature-id order."""
    order = np.lexsort((lex_rank, degenerate.astype(np.int8), p))
    ranks = np.empty(p.size, dtype=np.int64)
    ranks[order] = np.arange(1, p.size + 1)
    return ranks


def _lex_rank(feature_ids) -> np.ndarray:
    ids = np.asarray(feature_ids, dtype=str)
    out = np.empty(ids.size, dtype=np.int64)
    out[np.argsort(ids)] = np.arange(ids.size)
    return out


def _group_sums(values_ld: np.ndarray, idx: np.ndarray):
    sub = values_ld[:, idx]
    return sub.sum(axis=1), (sub * sub).sum(axis=1)


def _mean_var_from_sums(s, ss, n: int):
    mean = s / n
    var = (ss - s * s / n) / (n - 1)
    return mean, var


def t_rank(
    x: ExpressionMatrix,
    top_m: int = 200,
    variant: str = "welch",
    log_transform: bool = True,
) -> Ranking:
    """Rank all features by two-sample t-test and keep the top ``top_m``.

    Values are log2(v + 1)-transformed before testing unless
    ``log_transform`` is disabled.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown t-test variant {variant!r} (expected {VARIANTS})")
    if not (1 <= top_m <= x.n_features):
        raise ValidationError(
            f"top_m must be in 1..{x.n_features} (number of features), got {top_m}"
        )
    case_idx = x.group_indices("case")
    control_idx = x.group_indices("control")
    if case_idx.size < 2 or control_idx.size < 2:
        raise ValidationError("both groups need at least 2 samples for a t-test")

    values = _transformed(x, log_transform)
    mean_a = values[:, case_idx].mean(axis=1)
    var_a = values[:, case_idx].var(axis=1, ddof=1)
    mean_b = values[:, control_idx].mean(axis=1)
    var_b = values[:, control_idx].var(axis=1, ddof=1)
    t, p, degenerate = _t_and_p(case_idx.size, mean_a, var_a, control_idx.size, mean_b, var_b, variant)
    ranks = _rank_positions(p, degenerate, _lex_rank(x.feature_ids))

    order = np.argsort(ranks)[:top_m]
    return Ranking(
        feature_ids=tuple(x.feature_ids[i] for i in order),
        t_stats=t[order],
        p_values=p[order],
        variant=variant,
        log_transform=log_transform,
    )


def _loo_stat_engine(x: ExpressionMatrix, variant: str, log_transform: bool):
    """Build the per-deletion t-test closure shared by :func:`loo_rankings`
    and :func:`loo_t_stats`.

    Sufficient statistics per group are accumulated once in extended
    precision and downdated per deleted sample. A from-scratch variance
    recomputation kicks in only for the rare feature whose downdated
    variance falls below ``NEGATIVE_VARIANCE_FALLBACK``; tiny negatives
    above it are clamped to zero.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown t-test variant {variant!r} (expected {VARIANTS})")
    case_idx = x.group_indices("case")
    control_idx = x.group_indices("control")
    if case_idx.size < 3 or control_idx.size < 3:
        raise ValidationError(
            "each group needs at least 3 samples so a deletion leaves 2 for the t-test"
        )

    values = _transformed(x, log_transform)
    values_ld = values.astype(np.longdouble)
    sums = {}
    for label, idx in (("case", case_idx), ("control", control_idx)):
        s, ss = _group_sums(values_ld, idx)
        sums[label] = (s, ss, idx)
    full_stats = {}
    for label, (s, ss, idx) in sums.items():
        mean, var = _mean_var_from_sums(s, ss, idx.size)
        full_stats[label] = (
            mean.astype(np.float64),
            np.maximum(var.astype(np.float64), 0.0),
        )
    labels = np.asarray(x.labels)

    def stats_for(i: int):
        deleted_label = labels[i]
        s, ss, idx = sums[deleted_label]
        n_new = idx.size - 1
        col = values_ld[:, i]
        mean_d, var_d = _mean_var_from_sums(s - col, ss - col * col, n_new)
        mean_d = mean_d.astype(np.float64)
        var_d = var_d.astype(np.float64)

        bad = np.flatnonzero(var_d < NEGATIVE_VARIANCE_FALLBACK)
        if bad.size:
            remaining = idx[idx != i]
            var_d[bad] = values[np.ix_(bad, remaining)].var(axis=1, ddof=1)
        np.maximum(var_d, 0.0, out=var_d)

        if deleted_label == "case":
            n_a, mean_a, var_a = n_new, mean_d, var_d
            mean_b, var_b = full_stats["control"]
            n_b = control_idx.size
        else:
            n_b, mean_b, var_b = n_new, mean_d, var_d
            mean_a, var_a = full_stats["case"]
            n_a = case_idx.size
        return _t_and_p(n_a, mean_a, var_a, n_b, mean_b, var_b, variant)

    return stats_for


def _map_deletions(fn, n: int, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def loo_rankings(x: ExpressionMatrix, selected: Ranking, threads: int = 1) -> LooRankingSet:
    """Re-rank all features once per deleted sample and collect the global
    ranks of the selected features.

    Deletions are independent, so they may run on several threads; results
    merge in deleted-case order and do not depend on the thread count.
    """
    id_to_row = {f: i for i, f in enumerate(x.feature_ids)}
    try:
        sel_rows = np.array([id_to_row[f] for f in selected.feature_ids], dtype=np.int64)
    except KeyError as e:
        raise ValidationError(f"selected feature {e.args[0]!r} not present in matrix") from None

    stats_for = _loo_stat_engine(x, selected.variant, selected.log_transform)
    lex = _lex_rank(x.feature_ids)

    def one_deletion(i: int) -> np.ndarray:
        _, p, degenerate = stats_for(i)
        return _rank_positions(p, degenerate, lex)[sel_rows]

    rows = _map_deletions(one_deletion, x.n_samples, threads)
    return LooRankingSet(original=selected, case_ids=x.sample_ids, loo_ranks=np.vstack(rows))


def loo_t_stats(
    x: ExpressionMatrix,
    variant: str = "welch",
    log_transform: bool = True,
    threads: int = 1,
) -> np.ndarray:
    """Downdated t-statistic for every (deleted sample, feature) pair.

    Row i holds the t-statistics over all features with sample i removed,
    from the same downdating path :func:`loo_rankings` ranks on; mainly a
    diagnostic and verification hook.
    """
    stats_for = _loo_stat_engine(x, variant, log_transform)
    rows = _map_deletions(lambda i: stats_for(i)[0], x.n_samples, threads)
    return np.vstack(rows)
