"""Hyperparameter grids, ensembles and the two selection strategies.

Strategy 1 ("anmi_max") picks the member whose clustering agrees best, on
average, with every other member. Strategy 2 ("best_match") reclusters the
ensemble into a consensus C* and picks the member closest to it.
"""
import csv
import itertools
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from .algorithms import HyperparamConfig, run_config
from .config import DEFAULT_LINKAGE
from .consensus import consensus_clustering, consensus_sweep, evaluate_consensus
from .dataset import Dataset, pairwise_distances
from .errors import (
    ClusterSelectError,
    DataIOError,
    DegenerateInputError,
    DimensionError,
    EmptyInputError,
    FormatError,
    ParameterError,
    ParseError,
    SpecError,
)
from .labeling import Labeling, canonicalize, contingency
from .metrics import anmi, ari_from_table, leave_one_out_anmi, nmi, nmi_from_table, pairwise_nmi
from .parallel import parallel_map

logger = logging.getLogger("clusterselect.search")

STRATEGIES = ("anmi_max", "best_match")
CRITERIA = ("nmi", "ari")

# scores closer than this to the best one count as ties
TIE_TOLERANCE = 1e-12


# ----------------------------------------------------------------------------
# Grid
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    configs: Tuple[HyperparamConfig, ...]
    # algorithm -> parameter -> values, as given in the grid file
    ranges: Mapping[str, Mapping[str, Tuple[Any, ...]]] = field(default_factory=dict)

    def __post_init__(self):
        seen: Dict[HyperparamConfig, HyperparamConfig] = {}
        names = set()
        for config in self.configs:
            if config in seen:
                raise SpecError(f"duplicate config in grid: {config.display_name}")
            if config.display_name in names:
                raise SpecError(f"two grid configs share the name {config.display_name}")
            seen[config] = config
            names.add(config.display_name)

    def __len__(self) -> int:
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)

    @classmethod
    def from_spec(cls, entries: Sequence[Mapping[str, Any]]) -> "Grid":
        """Expand [{algorithm, params}] blocks; list-valued params form a cartesian product."""
        if not isinstance(entries, (list, tuple)):
            raise SpecError("grid must be a list of {algorithm, params} blocks")
        configs: List[HyperparamConfig] = []
        ranges: Dict[str, Dict[str, Tuple[Any, ...]]] = {}
        for pos, entry in enumerate(entries, start=1):
            if not isinstance(entry, Mapping) or "algorithm" not in entry:
                raise SpecError(f"grid block {pos}: expected a mapping with an 'algorithm' key")
            params = entry.get("params") or {}
            if not isinstance(params, Mapping):
                raise SpecError(f"grid block {pos}: params must be a mapping")
            names = list(params)
            values = [tuple(v) if isinstance(v, (list, tuple)) else (v,) for v in params.values()]
            if any(len(v) == 0 for v in values):
                raise SpecError(f"grid block {pos}: empty value list")
            algo = str(entry["algorithm"]).lower()
            block = ranges.setdefault(algo, {})
            for name, vals in zip(names, values):
                block[name] = tuple(dict.fromkeys(block.get(name, ()) + vals))
            for combo in itertools.product(*values):
                try:
                    configs.append(HyperparamConfig(algo, dict(zip(names, combo))))
                except ParameterError as e:
                    raise SpecError(f"grid block {pos}: {e}") from e
        return cls(tuple(configs), ranges)


def load_grid(path: Union[str, os.PathLike]) -> Grid:
    """Reads a grid from a YAML/JSON file: either a bare list or a mapping with a 'grid' key."""
    doc = load_document(path)
    if isinstance(doc, Mapping):
        if "grid" not in doc:
            raise SpecError(f"{path}: no 'grid' key")
        doc = doc["grid"]
    return Grid.from_spec(doc)


def load_document(path: Union[str, os.PathLike]) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return yaml.safe_load(f)
    except OSError as e:
        raise DataIOError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise SpecError(f"{path}: not valid YAML/JSON: {e}") from e


# ----------------------------------------------------------------------------
# Ensemble
# ----------------------------------------------------------------------------


@dataclass
class Ensemble:
    entries: List[Tuple[HyperparamConfig, Labeling]]
    dataset_fingerprint: str = ""
    # configs dropped while building, with the error message
    failures: List[Tuple[HyperparamConfig, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def configs(self) -> List[HyperparamConfig]:
        return [c for c, _ in self.entries]

    @property
    def labelings(self) -> List[Labeling]:
        return [lab for _, lab in self.entries]

    @property
    def names(self) -> List[str]:
        return [c.display_name for c, _ in self.entries]

    @property
    def n(self) -> int:
        return self.entries[0][1].n if self.entries else 0

    def seeds(self) -> Dict[str, int]:
        return {c.display_name: int(c.params["seed"]) for c in self.configs if "seed" in c.params}


def build_ensemble(ds: Dataset, grid: Grid, threads: Optional[int] = None) -> Ensemble:
    if len(grid) == 0:
        raise SpecError("grid is empty")
    dist = None
    if any(c.algorithm == "agglomerative" for c in grid):
        dist = pairwise_distances(ds)

    def run(config: HyperparamConfig) -> Tuple[Optional[Labeling], Optional[str]]:
        try:
            return run_config(ds, config, dist), None
        except (ClusterSelectError, ValueError, FloatingPointError) as e:
            return None, f"{type(e).__name__}: {e}"

    entries, failures = [], []
    for config, (labeling, error) in zip(grid, parallel_map(run, list(grid), threads)):
        if labeling is None:
            logger.warning("Dropping %s from the ensemble: %s", config.display_name, error)
            failures.append((config, error))
        else:
            entries.append((config, labeling))

    if not entries:
        raise DegenerateInputError("every grid config failed; the ensemble is empty")
    logger.info("Ensemble built: %d members, %d dropped, n=%d", len(entries), len(failures), ds.n)
    return Ensemble(entries, ds.fingerprint, failures)


def write_ensemble(ens: Ensemble, path: Union[str, os.PathLike]) -> None:
    """One column per member (header = display name), one row per point, canonical labels."""
    columns = [canonicalize(lab).labels for lab in ens.labelings]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ens.names)
        writer.writerows(np.column_stack(columns).tolist())


def read_ensemble(path: Union[str, os.PathLike]) -> Tuple[List[str], List[Labeling]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(f) if row]
    except OSError as e:
        raise DataIOError(f"cannot read ensemble {path}: {e}") from e
    if len(rows) < 2:
        raise EmptyInputError(f"ensemble file {path} has no label rows")
    names = [c.strip() for c in rows[0]]
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise FormatError(f"{path}: line {lineno}: expected {len(names)} columns, found {len(row)}")
        try:
            body.append([int(c) for c in row])
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: labels must be integers") from None
    table = np.asarray(body, dtype=np.int64)
    return names, [Labeling(table[:, j]) for j in range(table.shape[1])]


# ----------------------------------------------------------------------------
# Selection
# ----------------------------------------------------------------------------


@dataclass
class SelectionResult:
    strategy: str
    chosen_config: HyperparamConfig
    chosen_labeling: Labeling
    score: float
    full_scores: List[Tuple[str, Optional[float]]]
    ties: List[str] = field(default_factory=list)
    consensus: Optional[Labeling] = None
    k_star: Optional[int] = None
    linkage: Optional[str] = None
    criterion: str = "nmi"
    nmi_evaluations: int = 0
    dataset_fingerprint: str = ""
    seeds: Dict[str, int] = field(default_factory=dict)
    winner_anmi: Optional[float] = None
    winner_nmi_vs_consensus: Optional[float] = None
    nmi_matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def runner_up(self) -> Optional[Tuple[str, float]]:
        ranked = _ranking(self.full_scores)
        return ranked[1] if len(ranked) > 1 else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "strategy": self.strategy,
            "chosen_config": self.chosen_config.to_dict(),
            "score": self.score,
            "criterion": self.criterion,
            "full_scores": [{"config": name, "score": s} for name, s in self.full_scores],
            "ties": list(self.ties),
            "consensus": None if self.consensus is None else canonicalize(self.consensus).tolist(),
            "chosen_labels": canonicalize(self.chosen_labeling).tolist(),
            "k_star": self.k_star,
            "linkage": self.linkage,
            "nmi_evaluations": self.nmi_evaluations,
            "dataset_fingerprint": self.dataset_fingerprint,
            "seeds": dict(self.seeds),
            "winner_anmi": self.winner_anmi,
            "winner_nmi_vs_consensus": self.winner_nmi_vs_consensus,
        }


def _ranking(scores: Sequence[Tuple[str, Optional[float]]]) -> List[Tuple[str, float]]:
    defined = [(i, name, s) for i, (name, s) in enumerate(scores) if s is not None and not np.isnan(s)]
    defined.sort(key=lambda t: (-t[2], t[0]))
    return [(name, s) for _, name, s in defined]


def _argmax(scores: Sequence[Optional[float]]) -> Tuple[int, List[int]]:
    """Index of the first best defined score, and every index tied with it."""
    defined = [(i, s) for i, s in enumerate(scores) if s is not None and not np.isnan(s)]
    if not defined:
        raise DegenerateInputError("no ensemble member has a defined score")
    best = max(s for _, s in defined)
    tied = [i for i, s in defined if s >= best - TIE_TOLERANCE]
    return tied[0], tied


def select_anmi(ens: Ensemble, threads: Optional[int] = None) -> SelectionResult:
    """Strategy 1: leave-one-out ANMI maximisation."""
    if len(ens) < 2:
        raise DegenerateInputError("ANMI selection needs at least two ensemble members")
    matrix, evaluations = pairwise_nmi(ens.labelings, threads)
    scores = [float(v) for v in leave_one_out_anmi(matrix)]
    best, tied = _argmax(scores)
    config, labeling = ens.entries[best]
    if len(tied) > 1:
        logger.info("ANMI tie between %d configs, keeping %s", len(tied), config.display_name)
    logger.info("Strategy anmi_max chose %s (ANMI=%.6g, %d NMI evaluations)", config.display_name, scores[best], evaluations)
    return SelectionResult(
        strategy="anmi_max",
        chosen_config=config,
        chosen_labeling=labeling,
        score=scores[best],
        full_scores=list(zip(ens.names, scores)),
        ties=[ens.names[i] for i in tied],
        nmi_evaluations=evaluations,
        dataset_fingerprint=ens.dataset_fingerprint,
        seeds=ens.seeds(),
        winner_anmi=anmi(labeling, ens.labelings),
        nmi_matrix=matrix,
    )


def score_against(labelings: Sequence[Labeling], reference: Labeling, criterion: str = "nmi",
                  threads: Optional[int] = None) -> List[Optional[float]]:
    if criterion not in CRITERIA:
        raise ParameterError(f"criterion must be one of {', '.join(CRITERIA)}")

    def score(lab: Labeling) -> Optional[float]:
        table = contingency(lab, reference)
        if criterion == "nmi":
            return nmi_from_table(table)
        return ari_from_table(table) if table.total >= 2 else None

    return parallel_map(score, list(labelings), threads)


def select_best_match(
    ens: Ensemble,
    k_star: int,
    linkage: str = DEFAULT_LINKAGE,
    criterion: str = "nmi",
    threads: Optional[int] = None,
    consensus: Optional[Labeling] = None,
) -> SelectionResult:
    """Strategy 2: the member closest to the consensus clustering.

    A precomputed consensus for the same (k_star, linkage) may be passed in.
    """
    if len(ens) < 1:
        raise DegenerateInputError("best-match selection needs a non-empty ensemble")
    if criterion not in CRITERIA:
        raise ParameterError(f"criterion must be one of {', '.join(CRITERIA)}")
    if consensus is not None:
        if consensus.n != ens.labelings[0].n:
            raise DimensionError(f"consensus has {consensus.n} points, ensemble members have {ens.labelings[0].n}")
        if consensus.k != k_star:
            raise ParameterError(f"consensus has {consensus.k} clusters but k_star={k_star}")
    c_star = consensus if consensus is not None else consensus_clustering(ens.labelings, k_star, linkage, threads)
    scores = score_against(ens.labelings, c_star, criterion, threads)
    best, tied = _argmax(scores)
    config, labeling = ens.entries[best]
    logger.info("Strategy best_match chose %s (%s=%.6g vs C*, k*=%d)", config.display_name, criterion, scores[best], k_star)
    return SelectionResult(
        strategy="best_match",
        chosen_config=config,
        chosen_labeling=labeling,
        score=float(scores[best]),
        full_scores=list(zip(ens.names, scores)),
        ties=[ens.names[i] for i in tied],
        consensus=c_star,
        k_star=k_star,
        linkage=linkage,
        criterion=criterion,
        dataset_fingerprint=ens.dataset_fingerprint,
        seeds=ens.seeds(),
        winner_anmi=anmi(labeling, ens.labelings),
        winner_nmi_vs_consensus=nmi(labeling, c_star),
    )


def attach_consensus(result: SelectionResult, consensus: Labeling, k_star: int, linkage: str) -> SelectionResult:
    """Records how a Strategy-1 winner relates to a consensus built separately."""
    result.consensus = consensus
    result.k_star = k_star
    result.linkage = linkage
    result.winner_nmi_vs_consensus = nmi(result.chosen_labeling, consensus)
    return result


@dataclass(frozen=True)
class SweepRow:
    k_star: int
    consensus_anmi: float
    winner: str
    score: float
    runner_up: Optional[str]
    runner_up_score: Optional[float]


def sweep_k_star(
    ens: Ensemble,
    k_stars: Iterable[int],
    linkage: str = DEFAULT_LINKAGE,
    criterion: str = "nmi",
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """Strategy 2 repeated over several k*, sharing one merge sequence."""
    consensuses = consensus_sweep(ens.labelings, k_stars, linkage, threads)
    rows = []
    for k, c_star in consensuses.items():
        result = select_best_match(ens, k, linkage, criterion, threads, consensus=c_star)
        runner = result.runner_up()
        rows.append(
            SweepRow(
                k_star=k,
                consensus_anmi=evaluate_consensus(c_star, ens.labelings),
                winner=result.chosen_config.display_name,
                score=result.score,
                runner_up=None if runner is None else runner[0],
                runner_up_score=None if runner is None else runner[1],
            )
        )
    return rows
