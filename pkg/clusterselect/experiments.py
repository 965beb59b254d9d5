"""Experiment specs and the runner that turns one spec into an output bundle."""
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .algorithms import LINKAGES
from .config import DEFAULT_LINKAGE
from .consensus import consensus_clustering, evaluate_consensus
from .dataset import (
    Dataset,
    load_csv,
    load_labeled_csv,
    load_sklearn_digits,
    pairwise_distances,
    spiral_arm_labels,
    synth_blobs,
    synth_fuzzy,
    synth_spiral,
)
from .errors import DimensionError, SpecError
from .labeling import Labeling, canonicalize, write_labeling
from .metrics import SILHOUETTE_CONVENTIONS, MetricReport, anmi, internal_indices, metric_report, nmi
from .reports import ReportWriter, aligned_table, layout_metric_tables, maxima_rows, metric_rows
from .search import (
    CRITERIA,
    Ensemble,
    Grid,
    SelectionResult,
    SweepRow,
    attach_consensus,
    build_ensemble,
    load_document,
    select_anmi,
    select_best_match,
    sweep_k_star,
    write_ensemble,
)

logger = logging.getLogger("clusterselect.experiments")

SOURCES = ("csv", "spiral", "blobs", "fuzzy", "sklearn_digits")


@dataclass
class ExperimentSpec:
    name: str
    dataset: Mapping[str, Any]
    grid: Grid
    k_star: int
    output_dir: str
    k_star_sweep: Tuple[int, ...] = ()
    linkage: str = DEFAULT_LINKAGE
    criterion: str = "nmi"
    silhouette: str = "printed"
    weighted_chi: bool = False
    embedding: Optional[str] = None
    # directory relative dataset/embedding paths resolve against
    base_dir: str = "."

    def __post_init__(self):
        if isinstance(self.k_star, bool) or not isinstance(self.k_star, int) or self.k_star < 1:
            raise SpecError(f"k_star must be a positive integer, got {self.k_star!r}")
        if any(isinstance(k, bool) or not isinstance(k, int) or k < 1 for k in self.k_star_sweep):
            raise SpecError("k_star_sweep must list positive integers")
        if self.linkage not in LINKAGES:
            raise SpecError(f"linkage must be one of {', '.join(LINKAGES)}")
        if self.criterion not in CRITERIA:
            raise SpecError(f"criterion must be one of {', '.join(CRITERIA)}")
        if self.silhouette not in SILHOUETTE_CONVENTIONS:
            raise SpecError(f"silhouette must be one of {', '.join(SILHOUETTE_CONVENTIONS)}")
        source = self.dataset.get("source") if isinstance(self.dataset, Mapping) else None
        if source not in SOURCES:
            raise SpecError(f"dataset.source must be one of {', '.join(SOURCES)}, got {source!r}")

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def parse_experiment_spec(doc: Mapping[str, Any], base_dir: str = ".") -> ExperimentSpec:
    if not isinstance(doc, Mapping):
        raise SpecError("an experiment spec must be a mapping")
    missing = [key for key in ("dataset", "grid", "k_star") if key not in doc]
    if missing:
        raise SpecError(f"experiment spec is missing {', '.join(missing)}")
    name = str(doc.get("name") or "experiment")
    return ExperimentSpec(
        name=name,
        dataset=dict(doc["dataset"] or {}),
        grid=Grid.from_spec(doc["grid"]),
        k_star=doc["k_star"],
        output_dir=str(doc.get("output_dir") or os.path.join("results", name)),
        k_star_sweep=tuple(doc.get("k_star_sweep") or ()),
        linkage=str(doc.get("linkage") or DEFAULT_LINKAGE),
        criterion=str(doc.get("criterion") or "nmi"),
        silhouette=str(doc.get("silhouette") or "printed"),
        weighted_chi=bool(doc.get("weighted_chi", False)),
        embedding=doc.get("embedding"),
        base_dir=base_dir,
    )


def load_experiment_spec(path: Union[str, os.PathLike]) -> ExperimentSpec:
    doc = load_document(path)
    return parse_experiment_spec(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def load_dataset(spec: ExperimentSpec) -> Tuple[Dataset, Optional[Labeling]]:
    """The spec's data plus its generating partition when one is known."""
    src = dict(spec.dataset)
    source = src.pop("source")
    params = dict(src.pop("params", None) or {})
    try:
        if source == "csv":
            if "path" not in src:
                raise SpecError("dataset.path is required for a csv source")
            path = spec.resolve(str(src["path"]))
            delimiter = src.get("delimiter", ",")
            has_header = bool(src.get("has_header", False))
            if src.get("label_column") is not None:
                return load_labeled_csv(path, int(src["label_column"]), has_header, delimiter, src.get("classes"))
            return load_csv(path, has_header, delimiter), None
        if source == "spiral":
            ds = synth_spiral(**params)
            return ds, spiral_arm_labels(params["n_per_arm"], params["arms"])
        if source == "blobs":
            return synth_blobs(**params)
        if source == "fuzzy":
            return synth_fuzzy(**params)
        return load_sklearn_digits(**params)
    except TypeError as e:
        raise SpecError(f"dataset.params for {source}: {e}") from e
    except KeyError as e:
        raise SpecError(f"dataset.params for {source}: missing {e}") from e


@dataclass
class ExperimentOutcome:
    spec: ExperimentSpec
    dataset: Dataset
    ensemble: Ensemble
    consensus: Labeling
    consensus_anmi: float
    best_match: SelectionResult
    anmi_max: Optional[SelectionResult]
    report: MetricReport
    truth: Optional[Labeling] = None
    sweep: List[SweepRow] = field(default_factory=list)
    files: List[str] = field(default_factory=list)


def _plot_coordinates(spec: ExperimentSpec, ds: Dataset) -> Optional[np.ndarray]:
    if spec.embedding:
        emb = load_csv(spec.resolve(str(spec.embedding)))
        if emb.n != ds.n or emb.d != 2:
            raise DimensionError(f"embedding must be {ds.n}×2, got {emb.n}×{emb.d}")
        return emb.points
    if ds.d == 2:
        return ds.points
    if ds.d == 1:
        return np.column_stack([ds.points[:, 0], np.zeros(ds.n)])
    logger.warning("Skipping plot_points.csv: data is %d-dimensional and no embedding was given", ds.d)
    return None


def _comparison_rows(
    ds: Dataset,
    dist: np.ndarray,
    ens: Ensemble,
    c_star: Labeling,
    winners: Sequence[Tuple[str, Labeling]],
    truth: Optional[Labeling],
    spec: ExperimentSpec,
) -> Tuple[List[str], List[List[Any]]]:
    header = ["clustering", "k", "chi", "di1", "di2", "silhouette", "anmi", "nmi_vs_consensus"]
    if truth is not None:
        header.append("nmi_vs_truth")
    rows = []
    for label, lab in [("consensus", c_star)] + list(winners):
        idx = internal_indices(ds, dist, lab, spec.silhouette, spec.weighted_chi)
        row = [label, lab.k, idx["chi"], idx["di1"], idx["di2"], idx["silhouette"],
               anmi(lab, ens.labelings), nmi(lab, c_star)]
        if truth is not None:
            row.append(nmi(lab, truth))
        rows.append(row)
    return header, rows


def run_experiment(spec: ExperimentSpec, threads: Optional[int] = None,
                   output_dir: Optional[str] = None) -> ExperimentOutcome:
    out_dir = output_dir or spec.output_dir
    logger.info("Running experiment %s into %s", spec.name, out_dir)
    ds, truth = load_dataset(spec)
    ens = build_ensemble(ds, spec.grid, threads)
    if spec.k_star > ds.n:
        raise SpecError(f"k_star={spec.k_star} exceeds the number of points n={ds.n}")

    c_star = consensus_clustering(ens.labelings, spec.k_star, spec.linkage, threads)
    consensus_anmi = evaluate_consensus(c_star, ens.labelings)
    best = select_best_match(ens, spec.k_star, spec.linkage, spec.criterion, threads, consensus=c_star)
    first: Optional[SelectionResult] = None
    if len(ens) >= 2:
        first = attach_consensus(select_anmi(ens, threads), c_star, spec.k_star, spec.linkage)
    else:
        logger.warning("Skipping ANMI selection: the ensemble has a single member")

    dist = pairwise_distances(ds)
    report = metric_report(
        ds, dist, ens.names, ens.labelings, c_star,
        nmi_matrix=None if first is None else first.nmi_matrix,
        convention=spec.silhouette, weighted_chi=spec.weighted_chi, threads=threads,
    )
    sweep = sweep_k_star(ens, spec.k_star_sweep, spec.linkage, spec.criterion, threads) if spec.k_star_sweep else []

    writer = ReportWriter(out_dir)
    write_ensemble(ens, writer.path("ensemble_labels.csv"))
    writer.record("ensemble_labels.csv")
    consensus_name = f"consensus_k{spec.k_star}.csv"
    write_labeling(c_star, writer.path(consensus_name))
    writer.record(consensus_name)

    header, rows = metric_rows(report)
    writer.format_csv("metrics.csv", header, rows)
    writer.format_text("metrics.txt", layout_metric_tables(report, ens.configs))
    header, rows = maxima_rows(report)
    writer.format_csv("metric_maxima.csv", header, rows)
    writer.format_text("metric_maxima.txt", aligned_table(header, rows))

    if first is not None:
        writer.format_json("selection_anmi.json", first.to_dict())
    writer.format_json("selection_best_match.json", best.to_dict())

    winners = [("best_match", best.chosen_labeling)]
    if first is not None:
        winners.insert(0, ("anmi_max", first.chosen_labeling))
    header, rows = _comparison_rows(ds, dist, ens, c_star, winners, truth, spec)
    writer.format_csv("internal_comparison.csv", header, rows)
    writer.format_text("internal_comparison.txt", aligned_table(header, rows))

    coords = _plot_coordinates(spec, ds)
    if coords is not None:
        columns = [canonicalize(c_star).labels] + [canonicalize(lab).labels for lab in ens.labelings]
        plot_header = ["x", "y", "consensus"] + ens.names
        plot_rows = [[x, y] + [int(col[i]) for col in columns] for i, (x, y) in enumerate(coords.tolist())]
        writer.format_csv("plot_points.csv", plot_header, plot_rows)

    if sweep:
        sweep_header = ["k_star", "consensus_anmi", "winner", "score", "runner_up", "runner_up_score"]
        sweep_rows = [[r.k_star, r.consensus_anmi, r.winner, r.score, r.runner_up, r.runner_up_score] for r in sweep]
        writer.format_csv("k_star_sweep.csv", sweep_header, sweep_rows)
        writer.format_text("k_star_sweep.txt", aligned_table(sweep_header, sweep_rows))

    summary: Dict[str, Any] = {
        "name": spec.name,
        "n": ds.n,
        "d": ds.d,
        "dataset_fingerprint": ds.fingerprint,
        "ensemble_size": len(ens),
        "failures": [{"config": c.display_name, "error": msg} for c, msg in ens.failures],
        "k_star": spec.k_star,
        "linkage": spec.linkage,
        "criterion": spec.criterion,
        "consensus_anmi": consensus_anmi,
        "best_match": {"config": best.chosen_config.display_name, "score": best.score, "ties": best.ties},
        "anmi_max": None if first is None else {
            "config": first.chosen_config.display_name, "score": first.score, "ties": first.ties,
            "nmi_vs_consensus": first.winner_nmi_vs_consensus,
        },
    }
    if truth is not None:
        summary["nmi_vs_truth"] = {
            "consensus": nmi(c_star, truth),
            "best_match": nmi(best.chosen_labeling, truth),
            "anmi_max": None if first is None else nmi(first.chosen_labeling, truth),
        }
    summary["files"] = sorted(writer.written + ["summary.json"])
    writer.format_json("summary.json", summary)

    logger.info("Experiment %s done: best_match=%s anmi_max=%s", spec.name, best.chosen_config.display_name,
                None if first is None else first.chosen_config.display_name)
    return ExperimentOutcome(
        spec=spec, dataset=ds, ensemble=ens, consensus=c_star, consensus_anmi=consensus_anmi,
        best_match=best, anmi_max=first, report=report, truth=truth, sweep=sweep, files=list(writer.written),
    )
