"""Base clustering algorithms and the hyperparameter configs that select them."""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .config import DEFAULT_LINKAGE, DEFAULT_MAX_ITER
from .dataset import Dataset, pairwise_distances
from .errors import ParameterError
from .labeling import Labeling, canonical_array

logger = logging.getLogger("clusterselect.algorithms")

ALGORITHMS = ("kmeans", "dbscan", "meanshift", "agglomerative")
LINKAGES = ("single", "average", "complete")
NOISE_MODES = ("cluster", "singletons")

# name -> (type, default or None when required)
PARAM_SCHEMA: Dict[str, Dict[str, Tuple[type, Any]]] = {
    "kmeans": {"k": (int, None), "seed": (int, 0), "max_iter": (int, DEFAULT_MAX_ITER)},
    "dbscan": {"eps": (float, None), "m_points": (int, None), "noise": (str, "cluster")},
    "meanshift": {"bandwidth": (float, None), "max_iter": (int, DEFAULT_MAX_ITER)},
    "agglomerative": {"k": (int, None), "linkage": (str, DEFAULT_LINKAGE)},
}


def _coerce(algorithm: str, name: str, kind: type, value: Any) -> Any:
    if kind is int:
        if isinstance(value, bool) or not float(value).is_integer():
            raise ParameterError(f"{algorithm}: {name} must be an integer, got {value!r}")
        return int(value)
    if kind is float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"{algorithm}: {name} must be a number, got {value!r}") from None
    return str(value)


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        short = f"{v:g}"
        return short if float(short) == v else repr(v)
    return str(v)


@dataclass(frozen=True, eq=False)
class HyperparamConfig:
    """One point of the search space: an algorithm plus its parameters."""

    algorithm: str
    params: Mapping[str, Any] = field(default_factory=dict)
    display_name: str = ""

    def __post_init__(self):
        algo = str(self.algorithm).lower()
        if algo not in PARAM_SCHEMA:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
        schema = PARAM_SCHEMA[algo]
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ParameterError(f"{algo}: unknown parameter(s) {', '.join(sorted(unknown))}")

        resolved = {}
        for name, (kind, default) in schema.items():
            if name in self.params:
                resolved[name] = _coerce(algo, name, kind, self.params[name])
            elif default is None:
                raise ParameterError(f"{algo}: missing required parameter {name!r}")
            else:
                resolved[name] = default
        _validate(algo, resolved)
        given = set(self.params)

        object.__setattr__(self, "algorithm", algo)
        object.__setattr__(self, "params", resolved)
        if not self.display_name:
            shown = ", ".join(f"{k}={_fmt(resolved[k])}" for k in schema if k in given)
            object.__setattr__(self, "display_name", f"{algo}({shown})")

    def _key(self) -> Tuple:
        return (self.algorithm, tuple(sorted(self.params.items())))

    def __eq__(self, other) -> bool:
        if not isinstance(other, HyperparamConfig):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __str__(self) -> str:
        return self.display_name

    def to_dict(self) -> Dict[str, Any]:
        return {"algorithm": self.algorithm, "params": dict(self.params), "display_name": self.display_name}


def _validate(algo: str, p: Dict[str, Any]) -> None:
    if "k" in p and p["k"] < 1:
        raise ParameterError(f"{algo}: k must be ≥ 1, got {p['k']}")
    if "max_iter" in p and p["max_iter"] < 1:
        raise ParameterError(f"{algo}: max_iter must be ≥ 1")
    if algo == "dbscan":
        if not p["eps"] > 0:
            raise ParameterError(f"dbscan: eps must be > 0, got {p['eps']}")
        if p["m_points"] < 1:
            raise ParameterError(f"dbscan: m_points must be ≥ 1, got {p['m_points']}")
        if p["noise"] not in NOISE_MODES:
            raise ParameterError(f"dbscan: noise must be one of {', '.join(NOISE_MODES)}")
    if algo == "meanshift" and not p["bandwidth"] > 0:
        raise ParameterError(f"meanshift: bandwidth must be > 0, got {p['bandwidth']}")
    if algo == "agglomerative" and p["linkage"] not in LINKAGES:
        raise ParameterError(f"agglomerative: linkage must be one of {', '.join(LINKAGES)}")


def kmeans(ds: Dataset, k: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER) -> Labeling:
    """Lloyd iterations from k distinct seeded random points.

    Stops at an assignment fixpoint or after max_iter rounds. A cluster that
    empties is re-seeded at the point farthest from its assigned centroid.
    """
    if not 1 <= k <= ds.n:
        raise ParameterError(f"kmeans: need 1 ≤ k ≤ n, got k={k}, n={ds.n}")
    X = ds.points
    rng = np.random.default_rng(seed)
    centroids = X[rng.choice(ds.n, size=k, replace=False)].copy()

    labels = None
    prev_objective = np.inf
    for it in range(max_iter):
        sq = cdist(X, centroids, metric="sqeuclidean")
        new_labels = sq.argmin(axis=1)
        objective = float(sq[np.arange(ds.n), new_labels].sum())
        if objective > prev_objective * (1 + 1e-9) + 1e-12:
            logger.warning("kmeans k=%d seed=%d: objective rose to %.10g at iter %d", k, seed, objective, it)
        prev_objective = objective
        logger.debug("kmeans k=%d seed=%d iter=%d objective=%.6g", k, seed, it, objective)

        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        sizes = np.bincount(labels, minlength=k)
        for c in range(k):
            if sizes[c]:
                centroids[c] = X[labels == c].mean(axis=0)
        for c in np.flatnonzero(sizes == 0):
            d_own = ((X - centroids[labels]) ** 2).sum(axis=1)
            far = int(d_own.argmax())
            logger.debug("kmeans: re-seeding empty cluster %d at point %d", c, far)
            centroids[c] = X[far]
            labels = labels.copy()
            labels[far] = c

    return Labeling(labels)


def dbscan(ds: Dataset, eps: float, m_points: int, noise: str = "cluster") -> Labeling:
    """Density-based clustering.

    A point is core when at least m_points points (itself included) lie
    within distance eps. Clusters are the connected components of core
    points under the eps-neighbour relation; a non-core point with a core
    neighbour joins the cluster of its nearest core neighbour. Everything
    else is noise: one shared label (noise="cluster") or one singleton
    cluster per noise point (noise="singletons").
    """
    if not eps > 0:
        raise ParameterError(f"dbscan: eps must be > 0, got {eps}")
    if m_points < 1:
        raise ParameterError(f"dbscan: m_points must be ≥ 1, got {m_points}")
    if noise not in NOISE_MODES:
        raise ParameterError(f"dbscan: noise must be one of {', '.join(NOISE_MODES)}")

    n = ds.n
    tree = cKDTree(ds.points)
    pairs = tree.query_pairs(eps, output_type="ndarray")
    i, j = (pairs[:, 0], pairs[:, 1]) if pairs.size else (np.empty(0, np.int64), np.empty(0, np.int64))
    degree = 1 + np.bincount(i, minlength=n) + np.bincount(j, minlength=n)
    core = degree >= m_points

    both = core[i] & core[j]
    graph = coo_matrix((np.ones(int(both.sum())), (i[both], j[both])), shape=(n, n))
    _, component = connected_components(graph, directed=False)

    labels = np.full(n, -1, dtype=np.int64)
    labels[core] = component[core]

    # border points: nearest core neighbour, ties to the lower index
    src = np.concatenate([i, j])
    dst = np.concatenate([j, i])
    sel = core[dst] & ~core[src]
    if sel.any():
        src, dst = src[sel], dst[sel]
        dist = np.linalg.norm(ds.points[src] - ds.points[dst], axis=1)
        order = np.lexsort((dst, dist, src))
        _, first = np.unique(src[order], return_index=True)
        chosen = order[first]
        labels[src[chosen]] = component[dst[chosen]]

    clustered = labels >= 0
    out = np.empty(n, dtype=np.int64)
    n_clusters = 0
    if clustered.any():
        out[clustered] = canonical_array(labels[clustered])
        n_clusters = int(out[clustered].max()) + 1
    noise_idx = np.flatnonzero(~clustered)
    logger.debug("dbscan eps=%g m_points=%d: %d clusters, %d noise", eps, m_points, n_clusters, noise_idx.size)
    if noise_idx.size == 0:
        return Labeling(out)
    if noise == "singletons":
        out[noise_idx] = n_clusters + np.arange(noise_idx.size)
        return Labeling(out)
    out[noise_idx] = n_clusters
    return Labeling(out, noise_label=n_clusters)


def meanshift(ds: Dataset, bandwidth: float, max_iter: int = DEFAULT_MAX_ITER) -> Labeling:
    """Flat-kernel mean shift without bin seeding.

    Every point climbs to the mean of the data points within `bandwidth`
    until it moves less than 1e-3·bandwidth. Converged modes are merged
    greedily, strongest first (most data points within bandwidth), dropping
    any mode closer than `bandwidth` to a kept one; each point takes the
    label of the kept mode nearest to where it converged.
    """
    if not bandwidth > 0:
        raise ParameterError(f"meanshift: bandwidth must be > 0, got {bandwidth}")
    X = ds.points
    tree = cKDTree(X)
    tol = 1e-3 * bandwidth

    pos = X.copy()
    active = np.ones(ds.n, dtype=bool)
    for it in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        neighbours = tree.query_ball_point(pos[idx], bandwidth)
        for p, nb in zip(idx, neighbours):
            if not nb:
                active[p] = False
                continue
            new = X[nb].mean(axis=0)
            if np.linalg.norm(new - pos[p]) < tol:
                active[p] = False
            pos[p] = new
        logger.debug("meanshift bandwidth=%g iter=%d still moving=%d", bandwidth, it, int(active.sum()))

    support = np.array([len(nb) for nb in tree.query_ball_point(pos, bandwidth)])
    order = np.lexsort((np.arange(ds.n), -support))
    modes: List[np.ndarray] = []
    for p in order:
        if not modes or np.min(np.linalg.norm(np.asarray(modes) - pos[p], axis=1)) >= bandwidth:
            modes.append(pos[p])
    modes_arr = np.asarray(modes)
    labels = cdist(pos, modes_arr).argmin(axis=1)
    return Labeling(canonical_array(labels))


def merge_sequence(dist: np.ndarray, linkage: str = DEFAULT_LINKAGE, stop_at: int = 1) -> List[Tuple[int, int, float]]:
    """Bottom-up merges (i, j, height) until `stop_at` clusters remain.

    Clusters are identified by their smallest point index; each step merges
    the closest pair, ties going to the smallest (i, j). Linkage updates use
    the Lance-Williams formulas.
    """
    if linkage not in LINKAGES:
        raise ParameterError(f"linkage must be one of {', '.join(LINKAGES)}")
    D = np.array(dist, dtype=np.float64, copy=True)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ParameterError(f"distance matrix must be square, got shape {D.shape}")
    n = D.shape[0]
    if not 1 <= stop_at <= n:
        raise ParameterError(f"need 1 ≤ k ≤ n, got k={stop_at}, n={n}")
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    merges = []
    # per-row nearest neighbour cache; argmin keeps the lowest column on ties
    nn_idx = D.argmin(axis=1)
    nn_val = D[np.arange(n), nn_idx]
    for _ in range(n - stop_at):
        i = int(np.argmin(nn_val))
        j = int(nn_idx[i])
        if i > j:
            i, j = j, i
        height = float(D[i, j])
        if linkage == "single":
            row = np.minimum(D[i], D[j])
        elif linkage == "complete":
            row = np.maximum(D[i], D[j])
        else:
            row = (size[i] * D[i] + size[j] * D[j]) / (size[i] + size[j])
        D[i, :] = row
        D[:, i] = row
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] += size[j]
        merges.append((i, j, height))

        nn_val[j] = np.inf
        stale = (nn_idx == i) | (nn_idx == j)
        stale[i] = True
        stale[j] = False
        rows = np.flatnonzero(stale)
        if rows.size:
            nn_idx[rows] = D[rows].argmin(axis=1)
            nn_val[rows] = D[rows, nn_idx[rows]]
        col = D[:, i]
        closer = ~stale & ((col < nn_val) | ((col == nn_val) & (i < nn_idx)))
        closer[j] = False
        nn_idx[closer] = i
        nn_val[closer] = col[closer]
    return merges


def cut_merges(merges: List[Tuple[int, int, float]], n: int, k: int) -> Labeling:
    """Partition after applying the first n-k merges of a merge sequence."""
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 ≤ k ≤ n, got k={k}, n={n}")
    if len(merges) < n - k:
        raise ParameterError(f"merge sequence stops at {n - len(merges)} clusters, cannot cut at k={k}")
    parent = np.arange(n)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in merges[: n - k]:
        ri, rj = find(i), find(j)
        parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(x) for x in range(n)])
    return Labeling(canonical_array(roots))


def agglomerative(dist: np.ndarray, k: int, linkage: str = DEFAULT_LINKAGE) -> Labeling:
    n = np.asarray(dist).shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"agglomerative: need 1 ≤ k ≤ n, got k={k}, n={n}")
    return cut_merges(merge_sequence(dist, linkage, stop_at=k), n, k)


def run_config(ds: Dataset, config: HyperparamConfig, dist: Optional[np.ndarray] = None) -> Labeling:
    p = config.params
    if config.algorithm == "kmeans":
        return kmeans(ds, p["k"], seed=p["seed"], max_iter=p["max_iter"])
    if config.algorithm == "dbscan":
        return dbscan(ds, p["eps"], p["m_points"], noise=p["noise"])
    if config.algorithm == "meanshift":
        return meanshift(ds, p["bandwidth"], max_iter=p["max_iter"])
    if dist is None:
        dist = pairwise_distances(ds)
    return agglomerative(dist, p["k"], linkage=p["linkage"])
