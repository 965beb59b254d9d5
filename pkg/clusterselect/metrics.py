"""Clustering comparison criteria and internal validity indices.

External criteria (NMI, ANMI, Rand, Jaccard, ARI) compare two labelings
through their contingency table. Internal indices (CHI, the two Dunn-type
indices, silhouette) score one labeling against the data. An internal
index that is not defined for a labeling comes back as None; a zero
within-cluster spread with positive separation comes back as math.inf.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import Dataset
from .errors import DegenerateInputError, DimensionError, ParameterError
from .labeling import Labeling, as_labeling, canonical_array, contingency, pair_counts, ContingencyTable
from .parallel import parallel_map

logger = logging.getLogger("clusterselect.metrics")

SILHOUETTE_CONVENTIONS = ("printed", "rousseeuw")

METRIC_NAMES = (
    "anmi",
    "nmi_vs_consensus",
    "ari_vs_consensus",
    "rand",
    "jaccard",
    "chi",
    "di1",
    "di2",
    "silhouette",
)

# ----------------------------------------------------------------------------
# External criteria
# ----------------------------------------------------------------------------


def _entropy(marginals: np.ndarray, n: int) -> float:
    p = marginals[marginals > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi_from_table(table: ContingencyTable) -> float:
    n = table.total
    if table.counts.shape[0] < 2 or table.counts.shape[1] < 2:
        return 0.0
    rows, cols = np.nonzero(table.counts)
    nst = table.counts[rows, cols].astype(np.float64)
    ns = table.row_marginals[rows].astype(np.float64)
    nt = table.col_marginals[cols].astype(np.float64)
    mutual = float(np.sum(nst / n * np.log(n * nst / (ns * nt))))
    denom = math.sqrt(_entropy(table.row_marginals, n) * _entropy(table.col_marginals, n))
    return min(max(mutual / denom, 0.0), 1.0)


def nmi(a: Labeling, b: Labeling) -> float:
    """Mutual information normalised by the geometric mean of the entropies.

    Natural logarithm; empty cells contribute nothing. Zero when either
    labeling is a single cluster.
    """
    return nmi_from_table(contingency(as_labeling(a), as_labeling(b)))


def anmi(c: Labeling, ensemble: Sequence[Labeling]) -> float:
    if len(ensemble) == 0:
        raise DegenerateInputError("ANMI needs a non-empty ensemble")
    return float(np.mean([nmi(c, member) for member in ensemble]))


def pairwise_nmi(labelings: Sequence[Labeling], threads: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """Symmetric m×m NMI matrix with a unit diagonal.

    Returns the matrix and the number of NMI evaluations performed, which is
    m(m-1)/2: the diagonal is never evaluated and each pair only once.
    """
    m = len(labelings)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    values = parallel_map(lambda ij: nmi(labelings[ij[0]], labelings[ij[1]]), pairs, threads)
    mat = np.eye(m)
    for (i, j), v in zip(pairs, values):
        mat[i, j] = mat[j, i] = v
    return mat, len(pairs)


def leave_one_out_anmi(nmi_matrix: np.ndarray) -> np.ndarray:
    """ANMI of every member against all other members."""
    m = nmi_matrix.shape[0]
    if m < 2:
        raise DegenerateInputError("leave-one-out ANMI needs at least two members")
    return (nmi_matrix.sum(axis=1) - np.diag(nmi_matrix)) / (m - 1)


def rand(a: Labeling, b: Labeling) -> float:
    n11, n00, n10, n01 = pair_counts(a, b)
    return (n11 + n00) / (n11 + n00 + n10 + n01)


def jaccard(a: Labeling, b: Labeling) -> Optional[float]:
    n11, _, n10, n01 = pair_counts(a, b)
    denom = n11 + n10 + n01
    if denom == 0:
        return None
    return n11 / denom


def _comb2(x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.int64)
    return int(np.sum(x * (x - 1) // 2))


def ari_from_table(table: ContingencyTable) -> Optional[float]:
    total_pairs = table.total * (table.total - 1) // 2
    index = _comb2(table.counts)
    sum_a = _comb2(table.row_marginals)
    sum_b = _comb2(table.col_marginals)
    # scaled by 2·C(n,2) so everything stays an exact integer
    num = 2 * (index * total_pairs - sum_a * sum_b)
    den = (sum_a + sum_b) * total_pairs - 2 * sum_a * sum_b
    if den == 0:
        same = index == sum_a == sum_b
        return 1.0 if same else None
    return num / den


def ari(a: Labeling, b: Labeling) -> Optional[float]:
    """Adjusted Rand index; 1.0 for identical partitions, None when 0/0 otherwise."""
    a, b = as_labeling(a), as_labeling(b)
    if a.n != b.n:
        raise DimensionError(f"labelings have different lengths ({a.n} vs {b.n})")
    if a.n < 2:
        raise DegenerateInputError("ARI needs at least two points")
    return ari_from_table(contingency(a, b))


# ----------------------------------------------------------------------------
# Internal indices
# ----------------------------------------------------------------------------


def _check_partition(n: int, c: Labeling) -> np.ndarray:
    if c.n != n:
        raise DimensionError(f"labeling has {c.n} points, data has {n}")
    return canonical_array(c.labels)


def chi(ds: Dataset, c: Labeling, weighted: bool = False) -> Optional[float]:
    """Calinski-Harabasz index.

    The default sums squared barycenter offsets unweighted; weighted=True
    multiplies each by its cluster size (the textbook form).
    """
    labels = _check_partition(ds.n, c)
    k = int(labels.max()) + 1
    if k < 2 or k >= ds.n:
        return None
    X = ds.points
    sizes = np.bincount(labels, minlength=k).astype(np.float64)
    centroids = np.zeros((k, ds.d))
    np.add.at(centroids, labels, X)
    centroids /= sizes[:, None]
    mu = X.mean(axis=0)

    offsets = ((centroids - mu) ** 2).sum(axis=1)
    between = float(np.sum(offsets * sizes)) if weighted else float(np.sum(offsets))
    within = float(((X - centroids[labels]) ** 2).sum())
    if within == 0.0:
        return math.inf if between > 0 else None
    return (between / (k - 1)) / (within / (ds.n - k))


def _check_dist(dist: np.ndarray, c: Labeling) -> Tuple[np.ndarray, np.ndarray, int]:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise DimensionError(f"distance matrix must be square, got shape {dist.shape}")
    labels = _check_partition(dist.shape[0], c)
    return dist, labels, int(labels.max()) + 1


def _separations_and_diameters(dist: np.ndarray, labels: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """k×k minimum inter-cluster distances and per-cluster diameters."""
    sep = np.full((k, k), np.inf)
    diam = np.zeros(k)
    for a in range(k):
        rows = labels == a
        block = dist[rows]
        col_min = block.min(axis=0)
        np.minimum.at(sep[a], labels, col_min)
        diam[a] = block[:, rows].max()
    np.fill_diagonal(sep, 0.0)
    return sep, diam


def dunn1(dist: np.ndarray, c: Labeling) -> Optional[float]:
    """Smallest inter-cluster gap over largest cluster diameter."""
    dist, labels, k = _check_dist(dist, c)
    if k < 2:
        return None
    sep, diam = _separations_and_diameters(dist, labels, k)
    max_diam = float(diam.max())
    if max_diam == 0.0:
        return None
    return float(sep[np.triu_indices(k, 1)].min()) / max_diam


def dunn2(dist: np.ndarray, c: Labeling) -> Optional[float]:
    """Mean inter-cluster gap over mean cluster diameter."""
    dist, labels, k = _check_dist(dist, c)
    if k < 2:
        return None
    sep, diam = _separations_and_diameters(dist, labels, k)
    mean_diam = float(diam.mean())
    if mean_diam == 0.0:
        return None
    return float(sep[np.triu_indices(k, 1)].mean()) / mean_diam


def silhouette_samples(dist: np.ndarray, c: Labeling, convention: str = "printed") -> Optional[np.ndarray]:
    if convention not in SILHOUETTE_CONVENTIONS:
        raise ParameterError(f"silhouette convention must be one of {', '.join(SILHOUETTE_CONVENTIONS)}")
    dist, labels, k = _check_dist(dist, c)
    if k < 2:
        return None
    n = dist.shape[0]
    sizes = np.bincount(labels, minlength=k).astype(np.float64)
    # sums[x, A] = Σ_{y ∈ A} d(x, y)
    sums = np.zeros((n, k))
    for a in range(k):
        sums[:, a] = dist[:, labels == a].sum(axis=1)

    own = labels
    own_size = sizes[own]
    if convention == "printed":
        a_x = sums[np.arange(n), own] / own_size
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            a_x = np.where(own_size > 1, sums[np.arange(n), own] / np.maximum(own_size - 1, 1), 0.0)

    means = sums / sizes[None, :]
    means[np.arange(n), own] = np.inf
    b_x = means.min(axis=1)

    top = np.maximum(a_x, b_x)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(top > 0, (b_x - a_x) / top, 0.0)
    if convention == "rousseeuw":
        s = np.where(own_size > 1, s, 0.0)
    return s


def silhouette(dist: np.ndarray, c: Labeling, convention: str = "printed") -> Optional[float]:
    """Mean silhouette.

    "printed": a(x) averages over the whole own cluster, x included, so a
    singleton scores 1. "rousseeuw": a(x) excludes x and singletons score 0.
    """
    s = silhouette_samples(dist, c, convention)
    return None if s is None else float(s.mean())


def internal_indices(
    ds: Dataset, dist: np.ndarray, c: Labeling, convention: str = "printed", weighted_chi: bool = False
) -> Dict[str, Optional[float]]:
    return {
        "chi": chi(ds, c, weighted=weighted_chi),
        "di1": dunn1(dist, c),
        "di2": dunn2(dist, c),
        "silhouette": silhouette(dist, c, convention),
    }


# ----------------------------------------------------------------------------
# Per-config report
# ----------------------------------------------------------------------------


@dataclass
class MetricReport:
    """Rows keyed by config display name, in grid order."""

    names: List[str] = field(default_factory=list)
    rows: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)

    def add(self, name: str, values: Dict[str, Optional[float]]) -> None:
        if name not in self.rows:
            self.names.append(name)
        self.rows[name] = {m: values.get(m) for m in METRIC_NAMES}

    def column(self, metric: str) -> List[Optional[float]]:
        return [self.rows[name][metric] for name in self.names]

    def argmax(self, metric: str) -> Optional[Tuple[str, float]]:
        """First config (grid order) with the largest defined value."""
        best = None
        for name in self.names:
            v = self.rows[name][metric]
            if v is None or (isinstance(v, float) and math.isnan(v)):
                continue
            if best is None or v > best[1]:
                best = (name, v)
        return best


def metric_report(
    ds: Dataset,
    dist: np.ndarray,
    names: Sequence[str],
    labelings: Sequence[Labeling],
    consensus: Labeling,
    nmi_matrix: Optional[np.ndarray] = None,
    convention: str = "printed",
    weighted_chi: bool = False,
    threads: Optional[int] = None,
) -> MetricReport:
    """Every metric for every ensemble member.

    ANMI is leave-one-out against the other members; NMI, ARI, Rand and
    Jaccard are taken against the consensus.
    """
    if nmi_matrix is None:
        nmi_matrix, _ = pairwise_nmi(labelings, threads)
    loo = leave_one_out_anmi(nmi_matrix) if len(labelings) > 1 else [None] * len(labelings)

    def row(i: int) -> Dict[str, Optional[float]]:
        lab = labelings[i]
        table = contingency(lab, consensus)
        values: Dict[str, Optional[float]] = {
            "anmi": None if loo[i] is None else float(loo[i]),
            "nmi_vs_consensus": nmi_from_table(table),
            "ari_vs_consensus": ari_from_table(table) if ds.n >= 2 else None,
            "rand": rand(lab, consensus) if ds.n >= 2 else None,
            "jaccard": jaccard(lab, consensus) if ds.n >= 2 else None,
        }
        values.update(internal_indices(ds, dist, lab, convention, weighted_chi))
        return values

    report = MetricReport()
    for name, values in zip(names, parallel_map(row, range(len(labelings)), threads)):
        report.add(name, values)
    return report
