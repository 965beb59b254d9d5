"""Command-line entry point: python -m clusterselect <subcommand> ..."""
import argparse
import dataclasses
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from .algorithms import ALGORITHMS, LINKAGES, NOISE_MODES, HyperparamConfig, run_config
from .bench import BENCH_HEADER, complexity_bench
from .config import DEFAULT_LINKAGE, configure_logging
from .consensus import consensus_clustering, evaluate_consensus, hamming_matrix, write_matrix_csv
from .dataset import load_csv, pairwise_distances
from .errors import ClusterSelectError, ParameterError
from .experiments import load_experiment_spec, run_experiment
from .labeling import read_labeling, write_labeling
from .metrics import SILHOUETTE_CONVENTIONS, ari, internal_indices, jaccard, metric_report, nmi, rand
from .reports import ReportWriter, aligned_table, format_value, layout_metric_tables, maxima_rows, metric_rows
from .search import (
    CRITERIA,
    attach_consensus,
    build_ensemble,
    load_grid,
    read_ensemble,
    select_anmi,
    select_best_match,
    write_ensemble,
)

logger = logging.getLogger("clusterselect.cli")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _load_data(args) -> Any:
    return load_csv(args.data, has_header=args.has_header, delimiter=args.delimiter)


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------


def cmd_cluster(args) -> int:
    params: Dict[str, Any] = {}
    for flag, name in (("k", "k"), ("seed", "seed"), ("max_iter", "max_iter"), ("eps", "eps"),
                       ("min_pts", "m_points"), ("noise", "noise"), ("bandwidth", "bandwidth"),
                       ("linkage", "linkage")):
        value = getattr(args, flag)
        if value is not None:
            params[name] = value
    config = HyperparamConfig(args.algo, params)
    ds = _load_data(args)
    labeling = run_config(ds, config)
    _ensure_parent(args.out)
    write_labeling(labeling, args.out)
    print(f"{config.display_name}: {labeling.k} clusters, {labeling.noise_count()} noise points -> {args.out}")
    return 0


def cmd_ensemble(args) -> int:
    ds = _load_data(args)
    ens = build_ensemble(ds, load_grid(args.grid), args.threads)
    _ensure_parent(args.out)
    write_ensemble(ens, args.out)
    print(f"{len(ens)} members ({len(ens.failures)} dropped) -> {args.out}")
    return 0


def cmd_consensus(args) -> int:
    if args.ensemble:
        _, labelings = read_ensemble(args.ensemble)
    elif args.data and args.grid:
        labelings = build_ensemble(_load_data(args), load_grid(args.grid), args.threads).labelings
    else:
        raise ParameterError("consensus needs --ensemble, or --data together with --grid")
    c_star = consensus_clustering(labelings, args.k_star, args.linkage, args.threads)
    _ensure_parent(args.out)
    write_labeling(c_star, args.out)
    if args.matrix_out:
        _ensure_parent(args.matrix_out)
        write_matrix_csv(hamming_matrix(labelings, args.threads), args.matrix_out)
    print(f"consensus k*={args.k_star} linkage={args.linkage}: ANMI={evaluate_consensus(c_star, labelings):.6g}"
          f" -> {args.out}")
    return 0


def cmd_select(args) -> int:
    if args.strategy in ("best-match", "both") and args.k_star is None:
        raise ParameterError("--strategy best-match requires --k-star")
    ds = _load_data(args)
    ens = build_ensemble(ds, load_grid(args.grid), args.threads)
    writer = ReportWriter(args.out_dir)

    first = best = None
    if args.strategy in ("anmi", "both"):
        first = select_anmi(ens, args.threads)
    if args.k_star is not None:
        c_star = consensus_clustering(ens.labelings, args.k_star, args.linkage, args.threads)
        if args.strategy in ("best-match", "both"):
            best = select_best_match(ens, args.k_star, args.linkage, args.criterion, args.threads, consensus=c_star)
        if first is not None:
            attach_consensus(first, c_star, args.k_star, args.linkage)
        report = metric_report(
            ds, pairwise_distances(ds), ens.names, ens.labelings, c_star,
            nmi_matrix=None if first is None else first.nmi_matrix, threads=args.threads,
        )
        header, rows = metric_rows(report)
        writer.format_csv("metrics.csv", header, rows)
        writer.format_text("metrics.txt", layout_metric_tables(report, ens.configs))
        header, rows = maxima_rows(report)
        writer.format_csv("metric_maxima.csv", header, rows)
    elif first is not None:
        writer.format_csv("anmi_scores.csv", ["config", "anmi"], first.full_scores)

    for result, name in ((first, "selection_anmi.json"), (best, "selection_best_match.json")):
        if result is None:
            continue
        writer.format_json(name, result.to_dict())
        print(f"{result.strategy}: {result.chosen_config.display_name} score={format_value(result.score)}")
    return 0


def cmd_metrics(args) -> int:
    ds = _load_data(args)
    labeling = read_labeling(args.labels)
    values: Dict[str, Any] = internal_indices(ds, pairwise_distances(ds), labeling, args.silhouette,
                                              args.weighted_chi)
    if args.reference:
        ref = read_labeling(args.reference)
        values["nmi"] = nmi(labeling, ref)
        if labeling.n >= 2:
            values.update({"ari": ari(labeling, ref), "rand": rand(labeling, ref), "jaccard": jaccard(labeling, ref)})
    rows = [[name, values[name]] for name in values]
    if args.out:
        _ensure_parent(args.out)
        writer = ReportWriter(os.path.dirname(os.path.abspath(args.out)))
        writer.format_json(os.path.basename(args.out), values)
    sys.stdout.write(aligned_table(["metric", "value"], rows))
    return 0


def cmd_experiment(args) -> int:
    spec = load_experiment_spec(args.spec)
    overrides = {}
    if args.k_star is not None:
        overrides["k_star"] = args.k_star
    if args.linkage is not None:
        overrides["linkage"] = args.linkage
    if args.criterion is not None:
        overrides["criterion"] = args.criterion
    if overrides:
        spec = dataclasses.replace(spec, **overrides)
    outcome = run_experiment(spec, args.threads, output_dir=args.out_dir)
    out_dir = args.out_dir or spec.output_dir
    print(f"{spec.name}: consensus k*={spec.k_star} ANMI={outcome.consensus_anmi:.6g}")
    if outcome.anmi_max is not None:
        print(f"  anmi_max:   {outcome.anmi_max.chosen_config.display_name} score={format_value(outcome.anmi_max.score)}")
    print(f"  best_match: {outcome.best_match.chosen_config.display_name} score={format_value(outcome.best_match.score)}")
    print(f"  {len(outcome.files)} files -> {out_dir}")
    return 0


def cmd_bench(args) -> int:
    rows = complexity_bench(args.n, args.m, k_star=args.k_star, seed=args.seed, threads=args.threads)
    table = [r.as_row() for r in rows]
    if args.out:
        _ensure_parent(args.out)
        writer = ReportWriter(os.path.dirname(os.path.abspath(args.out)))
        writer.format_csv(os.path.basename(args.out), BENCH_HEADER, table)
    sys.stdout.write(aligned_table(BENCH_HEADER, table))
    return 0


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


def _add_data_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--data", required=required, help="CSV file, one point per row")
    p.add_argument("--has-header", action="store_true", help="Skip the first non-blank row")
    p.add_argument("--delimiter", default=",", help="Column delimiter; 'whitespace' or 'tab' accepted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterselect",
                                     description="Select clustering hyperparameters without ground truth")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default: CLUSTERSELECT_THREADS or all cores)")
    parser.add_argument("--log-level", default=None, help="Logging level (default: CLUSTERSELECT_LOG_LEVEL or INFO)")
    parser.add_argument("--log-json", action="store_true", default=None, help="Emit JSON log lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="Run one algorithm and write its labeling")
    _add_data_flags(p)
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", type=int, help="DBSCAN m_points (the point itself counts)")
    p.add_argument("--noise", choices=NOISE_MODES)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--linkage", choices=LINKAGES)
    p.add_argument("--out", required=True, help="Labeling file to write")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("ensemble", help="Run every grid config and write the labelings")
    _add_data_flags(p)
    p.add_argument("--grid", required=True, help="Grid spec (JSON or YAML)")
    p.add_argument("--out", required=True, help="Ensemble CSV to write")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("consensus", help="Build the consensus clustering of an ensemble")
    _add_data_flags(p, required=False)
    p.add_argument("--ensemble", help="Ensemble CSV written by 'ensemble'")
    p.add_argument("--grid", help="Grid spec, used together with --data")
    p.add_argument("--k-star", type=int, required=True)
    p.add_argument("--linkage", choices=LINKAGES, default=DEFAULT_LINKAGE)
    p.add_argument("--out", required=True, help="Consensus labeling file to write")
    p.add_argument("--matrix-out", help="Also write the disagreement matrix as CSV")
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("select", help="Pick a config with Strategy 1 (anmi) or Strategy 2 (best-match)")
    _add_data_flags(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--strategy", choices=("anmi", "best-match", "both"), default="best-match")
    p.add_argument("--k-star", type=int)
    p.add_argument("--linkage", choices=LINKAGES, default=DEFAULT_LINKAGE)
    p.add_argument("--criterion", choices=CRITERIA, default="nmi")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("metrics", help="Score a labeling with internal and (optionally) external indices")
    _add_data_flags(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--reference", help="Reference labeling for NMI/ARI/Rand/Jaccard")
    p.add_argument("--silhouette", choices=SILHOUETTE_CONVENTIONS, default="printed")
    p.add_argument("--weighted-chi", action="store_true")
    p.add_argument("--out", help="Also write the values as JSON")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("experiment", help="Run an experiment spec and write its bundle")
    p.add_argument("spec", help="Experiment spec (JSON or YAML)")
    p.add_argument("--out-dir", help="Overrides the spec's output_dir")
    p.add_argument("--k-star", type=int)
    p.add_argument("--linkage", choices=LINKAGES)
    p.add_argument("--criterion", choices=CRITERIA)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench", help="Time both strategies over data and ensemble sizes")
    p.add_argument("--n", type=_int_list, default=[250, 500, 1000], help="Comma-separated point counts")
    p.add_argument("--m", type=_int_list, default=[10, 20, 40], help="Comma-separated ensemble sizes")
    p.add_argument("--k-star", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="Also write the table as CSV")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.log_json)
    try:
        return args.func(args)
    except ClusterSelectError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        logger.exception("Unexpected failure")
        return 3


if __name__ == "__main__":
    sys.exit(main())
