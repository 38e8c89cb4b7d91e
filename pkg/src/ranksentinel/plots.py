"""Deterministic SVG diagnostics for a detection run.

Three views mirror the three pipeline steps: the raw original-vs-deleted
rank scatter, the fitted weight curve with the observed changes overlaid,
and the per-case influence bars. Output is plain SVG with a fixed hash
salt and no timestamp so repeated runs produce identical bytes (up to the
renderer version string).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .baselines import fixed_weights
from .influence import InfluenceReport
from .ranker import LooRankingSet
from .weights import WeightModel, weight

_SVG_METADATA = {"Date": None}
_HIGHLIGHT = "black"
_BACKGROUND = "0.75"


def _new_figure(n_panels: int = 1, width: float = 5.0):
    plt.rcParams["svg.hashsalt"] = "ranksentinel"
    fig, axes = plt.subplots(1, n_panels, figsize=(width * n_panels, 4.0), squeeze=False)
    return fig, axes[0]


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def _scatter_panel(ax, loo_set: LooRankingSet, flagged_index: int | None, title: str) -> None:
    m = loo_set.original.m
    orig = np.arange(1, m + 1)
    for i, row in enumerate(loo_set.loo_ranks):
        if i == flagged_index:
            continue
        ax.scatter(orig, row, s=4, color=_BACKGROUND, rasterized=False)
    if flagged_index is not None:
        ax.scatter(orig, loo_set.loo_ranks[flagged_index], s=8, color=_HIGHLIGHT,
                   label=f"deleted {loo_set.case_ids[flagged_index]}")
        ax.legend(loc="upper left", frameon=False, fontsize=8)
    lim = max(m, int(loo_set.loo_ranks.max()))
    ax.plot([1, lim], [1, lim], lw=0.8, color="0.4")
    ax.set_xlabel("original rank")
    ax.set_ylabel("leave-one-out rank")
    ax.set_title(title)


def rank_scatter(path, loo_set: LooRankingSet, flagged_index: int | None = None) -> None:
    """Original vs leave-one-out ranks pooled over deletions; the flagged
    case's points drawn on top in black."""
    fig, (ax,) = _new_figure()
    _scatter_panel(ax, loo_set, flagged_index, "rank changes over deletions")
    _save(fig, path)


def weight_curve(
    path,
    model: WeightModel,
    loo_set: LooRankingSet,
    flagged_index: int | None = None,
    fixed_scheme: str | None = None,
) -> None:
    """Weight curve with the observed changes overlaid on the weight scale.

    Unchanged features sit on the curve; a changed feature appears at its
    original rank with the weight of its leave-one-out rank, above or
    below the curve. Vertical segments show the flagged case's changes.
    """
    fig, (ax,) = _new_figure()
    m = model.m
    xs = np.arange(1, m + 1)
    curve = weight(model, xs)
    ax.plot(xs, curve, color="0.2", lw=1.2, label=f"weights (kappa={model.kappa:.3f})")
    if fixed_scheme is not None:
        fw = fixed_weights(fixed_scheme, m)
        ax.plot(xs, fw / fw.sum(), color="0.5", lw=1.0, ls="--",
                label=f"{fixed_scheme} (rescaled to unit sum)")

    orig = np.arange(1, m + 1)
    for i, row in enumerate(loo_set.loo_ranks):
        changed = row != orig
        if not changed.any() or i == flagged_index:
            continue
        ax.scatter(orig[changed], weight(model, row[changed]), s=4, color=_BACKGROUND)
    if flagged_index is not None:
        row = loo_set.loo_ranks[flagged_index]
        changed = row != orig
        if changed.any():
            w_loo = weight(model, row[changed])
            w_orig = weight(model, orig[changed])
            ax.vlines(orig[changed], w_orig, w_loo, color=_HIGHLIGHT, lw=0.6)
            ax.scatter(orig[changed], w_loo, s=8, color=_HIGHLIGHT,
                       label=f"deleted {loo_set.case_ids[flagged_index]}")
    ax.set_xlabel("original rank")
    ax.set_ylabel("weight")
    ax.set_title("weighted rank changes")
    ax.legend(loc="upper right", frameon=False, fontsize=8)
    _save(fig, path)


def _bars_panel(ax, report: InfluenceReport, title: str) -> None:
    n = len(report.case_ids)
    positions = np.arange(1, n + 1)
    ax.bar(positions, report.std_scores, color=_BACKGROUND, width=0.8)
    i = report.flagged_index
    ax.bar([i + 1], [report.std_scores[i]], color=_HIGHLIGHT, width=0.8)
    ax.annotate(report.flagged_case_id, (i + 1, report.std_scores[i]),
                ha="center", va="bottom", fontsize=7)
    ax.set_xlabel("observation")
    ax.set_ylabel("standardized total rank change")
    ax.set_title(title)


def influence_bars(path, report: InfluenceReport) -> None:
    """Standardized per-case scores; the flagged candidate in black."""
    fig, (ax,) = _new_figure()
    _bars_panel(ax, report, f"influence per deleted case ({report.method})")
    _save(fig, path)


def comparison_panels(path, reports: dict[str, InfluenceReport]) -> None:
    """Side-by-side per-case score bars, one panel per method."""
    fig, axes = _new_figure(n_panels=len(reports), width=4.0)
    for ax, (name, report) in zip(axes, reports.items()):
        _bars_panel(ax, report, name)
    _save(fig, path)


def comparison_changes(
    path,
    loo_set: LooRankingSet,
    reports: dict[str, InfluenceReport],
    marked: dict[str, np.ndarray],
) -> None:
    """Per-method rank scatter for the flagged case, with that method's top
    changed features (0-based positions in ``marked``) boxed."""
    fig, axes = _new_figure(n_panels=len(reports), width=4.0)
    for ax, (name, report) in zip(axes, reports.items()):
        row = loo_set.loo_ranks[report.flagged_index]
        _scatter_panel(ax, loo_set, report.flagged_index,
                       f"{name}: deleted {report.flagged_case_id}")
        pos = np.asarray(marked.get(name, ()), dtype=np.int64)
        if pos.size:
            ax.scatter(pos + 1, row[pos], s=60, facecolors="none",
                       edgecolors=_HIGHLIGHT, marker="s", lw=0.9)
    _save(fig, path)
