"""Command-line pipeline: detect, compare, generate, weights-table.

``detect`` runs the three-step procedure end to end: derive the original
and leave-one-out rankings, fit the weight curve to the observed rank
changes (or take a fixed steepness), score every deletion, and flag the
candidate influential point. ``compare`` runs the adaptive metric next to
the two classical rank distances on the same data. All CSV/JSON artifacts
are byte-stable for fixed inputs, seed, and thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, baselines, influence, ingest, plots, ranker, weights
from .errors import DegenerateStatisticsError, RankSentinelError, ValidationError
from .synth import SyntheticSpec, generate_matrix

SCHEMA_NAME = "ranksentinel-report/v1"
METRICS = ("adaptive", "spearman", "wspearman")
_DELIMITERS = {"tab": "\t", "comma": ","}

DEFAULTS = {
    "top_m": 200,
    "metric": "adaptive",
    "variant": "welch",
    "log_transform": True,
    "normalize": True,
    "kappa": None,
    "kappa_min": weights.DEFAULT_KAPPA_MIN,
    "kappa_max": weights.DEFAULT_KAPPA_MAX,
    "kappa_tol": weights.DEFAULT_KAPPA_TOL,
    "seed": None,
    "threads": None,
    "delimiter": None,
    "center": False,
    "gap_threshold": influence.DEFAULT_GAP_THRESHOLD,
    "balance_ratio": None,
    "exclude": None,
    "fixed_weights": None,
}


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one detect/compare run (flags > config file > defaults)."""

    matrix: str
    labels: str
    outdir: str
    top_m: int = 200
    metric: str = "adaptive"
    variant: str = "welch"
    log_transform: bool = True
    normalize: bool = True
    kappa: float | None = None
    kappa_min: float = weights.DEFAULT_KAPPA_MIN
    kappa_max: float = weights.DEFAULT_KAPPA_MAX
    kappa_tol: float = weights.DEFAULT_KAPPA_TOL
    seed: int | None = None
    threads: int = 1
    delimiter: str | None = None
    center: bool = False
    gap_threshold: float = influence.DEFAULT_GAP_THRESHOLD
    balance_ratio: int | None = None
    exclude: str | None = None
    fixed_weights: str | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r} (expected {METRICS})")
        if self.top_m < 1:
            raise ValidationError(f"top_m must be >= 1, got {self.top_m}")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")
        if self.kappa is not None and not self.kappa > 0:
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        if not (0 < self.kappa_min < self.kappa_max):
            raise ValidationError("need 0 < kappa-min < kappa-max")
        if not self.kappa_tol > 0:
            raise ValidationError("kappa-tol must be positive")
        if self.gap_threshold < 0:
            raise ValidationError("gap-threshold must be non-negative")
        if self.balance_ratio is not None:
            if self.balance_ratio < 1:
                raise ValidationError("balance ratio must be a positive integer")
            if self.seed is None:
                raise ValidationError("--balance-ratio randomizes the case subsample; --seed is required")
        if self.delimiter is not None and self.delimiter not in _DELIMITERS:
            raise ValidationError(f"delimiter must be one of {tuple(_DELIMITERS)}")
        if self.fixed_weights is not None and self.fixed_weights not in baselines.FIXED_WEIGHT_SCHEMES:
            raise ValidationError(
                f"unknown fixed-weight scheme {self.fixed_weights!r} "
                f"(expected {baselines.FIXED_WEIGHT_SCHEMES})"
            )


def _fmt(v) -> str:
    return format(float(v), ".6g")


def _load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"config file {p} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"config file {p} must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ValidationError(f"config file {p} has unknown keys: {unknown}")
    return data


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, environment, and explicit flags."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(_load_config_file(args.config))
    env_threads = os.environ.get("RANKSENTINEL_THREADS")
    if env_threads is not None:
        try:
            merged["threads"] = int(env_threads)
        except ValueError:
            raise ValidationError(
                f"RANKSENTINEL_THREADS must be an integer, got {env_threads!r}"
            ) from None
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if merged["threads"] is None:
        merged["threads"] = 1
    return RunConfig(
        matrix=str(args.matrix), labels=str(args.labels), outdir=str(args.outdir), **merged
    )


def _prepare(cfg: RunConfig):
    """Shared front half of detect/compare: ingest, rank, leave-one-out."""
    x = ingest.load_matrix(cfg.matrix, cfg.labels, delimiter=_DELIMITERS.get(cfg.delimiter))
    if cfg.exclude:
        x = ingest.drop_excluded(x, cfg.exclude)
    if cfg.balance_ratio is not None:
        x = ingest.balance_groups(x, cfg.balance_ratio, cfg.seed)
    if cfg.normalize:
        x = ingest.cpm_normalize(x)
    x = ingest.filter_low_expressed(x)
    ranking = ranker.t_rank(x, cfg.top_m, cfg.variant, cfg.log_transform)
    loo = ranker.loo_rankings(x, ranking, threads=cfg.threads)
    return x, ranking, loo


def _write_original_ranking(path, ranking: ranker.Ranking) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("feature,rank,t,p\n")
        for i, fid in enumerate(ranking.feature_ids):
            fh.write(f"{fid},{i + 1},{_fmt(ranking.t_stats[i])},{_fmt(ranking.p_values[i])}\n")


def _write_loo_ranks(path, loo: ranker.LooRankingSet) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["feature", "original", *loo.case_ids]) + "\n")
        for j, fid in enumerate(loo.original.feature_ids):
            row = loo.loo_ranks[:, j]
            fh.write(",".join([fid, str(j + 1), *(str(int(r)) for r in row)]) + "\n")


def _write_weights_table(path, model: weights.WeightModel, fixed_scheme: str | None = None) -> None:
    xs = np.arange(1, model.m + 1)
    ws = weights.weight(model, xs)
    fixed = baselines.fixed_weights(fixed_scheme, model.m) if fixed_scheme else None
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        header = "rank,weight" + (f",{fixed_scheme}" if fixed_scheme else "")
        fh.write(header + "\n")
        for i, x in enumerate(xs):
            line = f"{x},{_fmt(ws[i])}"
            if fixed is not None:
                line += f",{_fmt(fixed[i])}"
            fh.write(line + "\n")


def _write_influence_table(path, report: influence.InfluenceReport) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("case,position,raw,standardized\n")
        for i, cid in enumerate(report.case_ids):
            fh.write(f"{cid},{i + 1},{_fmt(report.raw_scores[i])},{_fmt(report.std_scores[i])}\n")


def _config_echo(cfg: RunConfig) -> dict:
    # threads is an execution detail that never changes results; leaving it
    # out keeps reports byte-identical across degrees of parallelism.
    echo = asdict(cfg)
    del echo["threads"]
    return echo


def _flag_summary(report: influence.InfluenceReport) -> dict:
    i = report.flagged_index
    return {
        "case_id": report.flagged_case_id,
        "position": report.flagged_position,
        "raw_score": float(report.raw_scores[i]),
        "std_score": float(report.std_scores[i]),
        "gap": report.gap,
        "runner_up_gap": report.runner_up_gap,
        "is_candidate": report.is_candidate,
        "possible_multiplicity": report.possible_multiplicity,
    }


def _write_report_json(path, report, cfg, kappa_fitted: bool, warnings_list=()) -> None:
    payload = {
        "schema": SCHEMA_NAME,
        "tool": "ranksentinel",
        "version": __version__,
        "metric": report.method,
        "m": report.m,
        "n_cases": len(report.case_ids),
        "kappa": report.kappa_used,
        "kappa_fitted": kappa_fitted,
        "flagged": _flag_summary(report),
        "config": _config_echo(cfg),
    }
    if warnings_list:
        payload["warnings"] = list(warnings_list)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _clamp_warning(loo, m: int) -> list[str]:
    if int(loo.loo_ranks.max()) > m:
        return [
            "some leave-one-out ranks exceed the list length and were clamped "
            "to m inside the weighted rank distance"
        ]
    return []


def run_detect(cfg: RunConfig) -> influence.InfluenceReport:
    """Full detection pipeline; writes all artifacts into ``cfg.outdir``."""
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    x, ranking, loo = _prepare(cfg)
    changes = weights.RankChangeSet.from_loo(loo)

    model = None
    kappa_fitted = False
    if cfg.metric == "adaptive":
        if len(changes) == 0:
            raise DegenerateStatisticsError(
                "no deletion changes any rank; nothing to fit or score"
            )
        if cfg.kappa is not None:
            model = weights.WeightModel(kappa=cfg.kappa, m=ranking.m)
        else:
            model = weights.fit_kappa(changes, cfg.kappa_min, cfg.kappa_max, cfg.kappa_tol)
            kappa_fitted = True
        report = influence.adaptive_report(model, loo, cfg.gap_threshold, cfg.center)
    else:
        report = baselines.baseline_influence(cfg.metric, loo, cfg.gap_threshold, cfg.center)

    warnings_list = _clamp_warning(loo, ranking.m) if cfg.metric == "wspearman" else []
    _write_original_ranking(outdir / "original_ranking.csv", ranking)
    _write_loo_ranks(outdir / "loo_ranks.csv", loo)
    _write_influence_table(outdir / "influence.csv", report)
    _write_report_json(outdir / "report.json", report, cfg, kappa_fitted, warnings_list)
    plots.rank_scatter(outdir / "plot_rank_scatter.svg", loo, report.flagged_index)
    plots.influence_bars(outdir / "plot_influence.svg", report)
    if model is not None:
        _write_weights_table(outdir / "weights.csv", model)
        plots.weight_curve(
            outdir / "plot_weight_curve.svg", model, loo, report.flagged_index, cfg.fixed_weights
        )
    return report


def _per_feature_contributions(method: str, model, m: int, loo_row: np.ndarray) -> np.ndarray:
    orig = np.arange(1, m + 1, dtype=np.int64)
    diff = (orig - loo_row).astype(np.float64)
    if method == "spearman":
        return diff * diff
    if method == "wspearman":
        r_c = np.minimum(orig, m)
        q_c = np.minimum(loo_row, m)
        return diff * diff * ((m - r_c + 1) + (m - q_c + 1))
    w_orig = weights.weight(model, orig)
    w_loo = weights.weight(model, loo_row)
    return (w_orig - w_loo) ** 2


def _top_changed(method: str, model, loo: ranker.LooRankingSet, flagged: int, k: int = 10):
    row = loo.loo_ranks[flagged]
    contrib = _per_feature_contributions(method, model, loo.original.m, row)
    changed = np.flatnonzero(contrib > 0)
    order = changed[np.argsort(-contrib[changed], kind="stable")]
    return order[:k], contrib


def run_compare(cfg: RunConfig) -> dict[str, influence.InfluenceReport] | None:
    """Run all three metrics on one dataset and write side-by-side artifacts.

    When no deletion changes any rank there is nothing to compare: a clean
    no-rank-changes report is written and None returned (exit 0).
    """
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    x, ranking, loo = _prepare(cfg)
    changes = weights.RankChangeSet.from_loo(loo)

    if len(changes) == 0:
        payload = {
            "schema": "ranksentinel-compare/v1",
            "tool": "ranksentinel",
            "version": __version__,
            "no_rank_changes": True,
            "message": "no deletion changes any rank; all methods agree there is no influential point",
            "m": ranking.m,
            "n_cases": loo.n_cases,
            "config": _config_echo(cfg),
        }
        with (outdir / "compare_report.json").open("w", encoding="utf-8", newline="") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with (outdir / "compare_influence.csv").open("w", encoding="utf-8", newline="") as fh:
            fh.write("case,position,spearman,wspearman,adaptive\n")
            for i, cid in enumerate(loo.case_ids):
                fh.write(f"{cid},{i + 1},0,0,0\n")
        print("no rank changes across any deletion; nothing to compare")
        return None

    if cfg.kappa is not None:
        model = weights.WeightModel(kappa=cfg.kappa, m=ranking.m)
        kappa_fitted = False
    else:
        model = weights.fit_kappa(changes, cfg.kappa_min, cfg.kappa_max, cfg.kappa_tol)
        kappa_fitted = True
    reports = {
        "spearman": baselines.baseline_influence("spearman", loo, cfg.gap_threshold, cfg.center),
        "wspearman": baselines.baseline_influence("wspearman", loo, cfg.gap_threshold, cfg.center),
        "adaptive": influence.adaptive_report(model, loo, cfg.gap_threshold, cfg.center),
    }

    with (outdir / "compare_influence.csv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("case,position,spearman,wspearman,adaptive\n")
        for i, cid in enumerate(loo.case_ids):
            cells = ",".join(_fmt(reports[name].std_scores[i]) for name in ("spearman", "wspearman", "adaptive"))
            fh.write(f"{cid},{i + 1},{cells}\n")

    marked: dict[str, np.ndarray] = {}
    with (outdir / "compare_top_changes.csv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("metric,flagged_case,feature,original_rank,loo_rank,contribution\n")
        for name, report in reports.items():
            top, contrib = _top_changed(name, model, loo, report.flagged_index)
            marked[name] = top
            row = loo.loo_ranks[report.flagged_index]
            for j in top:
                fh.write(
                    f"{name},{report.flagged_case_id},{loo.original.feature_ids[j]},"
                    f"{j + 1},{int(row[j])},{_fmt(contrib[j])}\n"
                )

    payload = {
        "schema": "ranksentinel-compare/v1",
        "tool": "ranksentinel",
        "version": __version__,
        "no_rank_changes": False,
        "m": ranking.m,
        "n_cases": loo.n_cases,
        "kappa": model.kappa,
        "kappa_fitted": kappa_fitted,
        "flagged": {name: _flag_summary(r) for name, r in reports.items()},
        "config": _config_echo(cfg),
    }
    clamp = _clamp_warning(loo, ranking.m)
    if clamp:
        payload["warnings"] = clamp
    with (outdir / "compare_report.json").open("w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    plots.comparison_panels(outdir / "compare_panels.svg", reports)
    plots.comparison_changes(outdir / "compare_changes.svg", loo, reports, marked)
    return reports


def run_generate(spec: SyntheticSpec, outdir, delimiter: str = "tab") -> tuple[Path, Path]:
    """Write a synthetic matrix + labels pair into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ext = "tsv" if delimiter == "tab" else "csv"
    matrix_path = outdir / f"matrix.{ext}"
    label_path = outdir / f"labels.{ext}"
    x = generate_matrix(spec)
    ingest.write_matrix(x, matrix_path, label_path, delimiter=_DELIMITERS[delimiter])
    return matrix_path, label_path


def _add_common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("matrix", help="delimited expression matrix (features x samples)")
    p.add_argument("labels", help="two-column sample_id,label file")
    p.add_argument("-o", "--outdir", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--top-m", dest="top_m", type=int, help="selected list length (default 200)")
    p.add_argument("--metric", choices=METRICS, help="influence metric (default adaptive)")
    p.add_argument("--variant", choices=ranker.VARIANTS, help="t-test variant (default welch)")
    p.add_argument("--log-transform", dest="log_transform", action=argparse.BooleanOptionalAction,
                   default=None, help="log2(v+1) before testing (default on)")
    p.add_argument("--normalize", dest="normalize", action=argparse.BooleanOptionalAction,
                   default=None, help="counts-per-million scaling (default on; disable for pre-normalized input)")
    p.add_argument("--exclude", help="file of feature ids to drop before ranking")
    p.add_argument("--balance-ratio", dest="balance_ratio", type=int,
                   help="subsample cases to RATIO x controls (requires --seed)")
    p.add_argument("--seed", type=int, help="seed for randomized steps")
    p.add_argument("--kappa", type=float, help="fixed weight steepness; skips fitting")
    p.add_argument("--kappa-min", dest="kappa_min", type=float, help="fit bracket lower bound")
    p.add_argument("--kappa-max", dest="kappa_max", type=float, help="fit bracket upper bound")
    p.add_argument("--kappa-tol", dest="kappa_tol", type=float, help="fit tolerance on log(kappa)")
    p.add_argument("--gap-threshold", dest="gap_threshold", type=float,
                   help="gap labeling a candidate influential point (default 1.0)")
    p.add_argument("--center", dest="center", action=argparse.BooleanOptionalAction, default=None,
                   help="mean-center before dividing by the standard deviation")
    p.add_argument("--threads", type=int, help="parallel leave-one-out workers "
                   "(or env RANKSENTINEL_THREADS; default 1)")
    p.add_argument("--delimiter", choices=tuple(_DELIMITERS),
                   help="input delimiter (default: auto-detect)")
    p.add_argument("--fixed-weights", dest="fixed_weights",
                   choices=baselines.FIXED_WEIGHT_SCHEMES,
                   help="overlay a fixed weight scheme on the weight-curve plot")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ranksentinel",
        description="Detect influential points in t-test feature rankings by "
                    "leave-one-out re-ranking with adaptive top-prioritized weights.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run the detection pipeline")
    _add_common_options(p_detect)

    p_compare = sub.add_parser("compare", help="run all three metrics side by side")
    _add_common_options(p_compare)

    p_gen = sub.add_parser("generate", help="write a synthetic planted-IP dataset")
    p_gen.add_argument("-o", "--outdir", required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--n-cases", type=int, default=30)
    p_gen.add_argument("--n-controls", type=int, default=30)
    p_gen.add_argument("--n-features", type=int, default=2000)
    p_gen.add_argument("--signal-features", type=int, default=20)
    p_gen.add_argument("--effect-size", type=float, default=1.0)
    p_gen.add_argument("--contaminated-obs", type=int, default=1,
                       help="1-based observation position receiving the contamination")
    p_gen.add_argument("--contamination", type=float, default=8.0,
                       help="extra shift on the signal features, in noise-sd units")
    p_gen.add_argument("--delimiter", choices=tuple(_DELIMITERS), default="tab")

    p_wt = sub.add_parser("weights-table", help="dump the weight curve for a given kappa and m")
    p_wt.add_argument("--kappa", type=float, required=True)
    p_wt.add_argument("--m", type=int, required=True)
    p_wt.add_argument("-o", "--out", required=True, help="output CSV path")
    p_wt.add_argument("--fixed-weights", dest="fixed_weights",
                      choices=baselines.FIXED_WEIGHT_SCHEMES,
                      help="add a fixed-scheme column for comparison")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "detect":
            cfg = build_run_config(args)
            report = run_detect(cfg)
            marker = "candidate IP" if report.is_candidate else "no outstanding IP"
            kappa_note = f"kappa={report.kappa_used:.3f}, " if report.kappa_used is not None else ""
            print(
                f"flagged {report.flagged_case_id} (obs{report.flagged_position}), "
                f"{kappa_note}gap={report.gap:.3f}: {marker}"
            )
        elif args.command == "compare":
            cfg = build_run_config(args)
            reports = run_compare(cfg)
            if reports is not None:
                for name, rep in reports.items():
                    print(f"{name}: flagged {rep.flagged_case_id} (obs{rep.flagged_position}), "
                          f"gap={rep.gap:.3f}")
        elif args.command == "generate":
            spec = SyntheticSpec(
                n_cases=args.n_cases,
                n_controls=args.n_controls,
                n_features=args.n_features,
                n_signal=args.signal_features,
                effect_size=args.effect_size,
                contaminated_index=args.contaminated_obs - 1,
                contamination=args.contamination,
                seed=args.seed,
            )
            matrix_path, label_path = run_generate(spec, args.outdir, args.delimiter)
            print(f"wrote {matrix_path} and {label_path}")
        elif args.command == "weights-table":
            model = weights.WeightModel(kappa=args.kappa, m=args.m)
            _write_weights_table(args.out, model, args.fixed_weights)
            print(f"wrote {args.out}")
    except RankSentinelError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
