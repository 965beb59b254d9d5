"""Datasets: CSV ingestion, synthetic generators and pairwise distances."""
import csv
import hashlib
import logging
import os
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from .errors import DataIOError, DimensionError, EmptyInputError, FormatError, ParameterError, ParseError
from .labeling import Labeling

logger = logging.getLogger("clusterselect.dataset")

PathLike = Union[str, os.PathLike]


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray
    point_ids: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise DimensionError(f"points must be an n×d matrix, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise EmptyInputError("a dataset needs n ≥ 1 points of dimension d ≥ 1")
        if not np.all(np.isfinite(pts)):
            raise ParseError("dataset contains NaN or infinite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.point_ids is not None:
            ids = tuple(str(i) for i in self.point_ids)
            if len(ids) != pts.shape[0]:
                raise DimensionError(f"{len(ids)} point ids for {pts.shape[0]} points")
            object.__setattr__(self, "point_ids", ids)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.n}x{self.d}".encode())
        h.update(np.ascontiguousarray(self.points).tobytes())
        return h.hexdigest()

    def take(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        ids = None if self.point_ids is None else tuple(self.point_ids[i] for i in rows)
        return Dataset(self.points[rows], ids)


def _split_row(line: str, delimiter: Optional[str]) -> List[str]:
    if delimiter is None:
        return line.split()
    return next(csv.reader([line], delimiter=delimiter))


def _normalize_delimiter(delimiter: Optional[str]) -> Optional[str]:
    if delimiter in (None, "", "whitespace", "ws", " ", "\\s"):
        return None
    if delimiter in ("\\t", "tab"):
        return "\t"
    return delimiter


def _read_rows(path: PathLike, has_header: bool, delimiter: Optional[str]) -> List[Tuple[int, List[str]]]:
    delimiter = _normalize_delimiter(delimiter)
    try:
        with open(path, "r", encoding="utf-8-sig") as f:
            lines = f.readlines()
    except OSError as e:
        raise DataIOError(f"cannot read {path}: {e}") from e

    rows = []
    header_skipped = not has_header
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if not header_skipped:
            header_skipped = True
            continue
        rows.append((lineno, [c.strip() for c in _split_row(line.rstrip("\r\n"), delimiter)]))
    if not rows:
        raise EmptyInputError(f"{path} contains no data rows")

    width = len(rows[0][1])
    for lineno, cells in rows:
        if len(cells) != width:
            raise FormatError(f"{path}: line {lineno}: expected {width} columns, found {len(cells)}")
    return rows


def _parse_float(cell: str, path: PathLike, lineno: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"{path}: line {lineno}: not a number: {cell!r}") from None
    if not np.isfinite(v):
        raise ParseError(f"{path}: line {lineno}: non-finite value {cell!r}")
    return v


def load_csv(path: PathLike, has_header: bool = False, delimiter: Optional[str] = ",") -> Dataset:
    """Read one point per row. delimiter=None splits on whitespace."""
    rows = _read_rows(path, has_header, delimiter)
    points = [[_parse_float(c, path, lineno) for c in cells] for lineno, cells in rows]
    ds = Dataset(np.asarray(points, dtype=np.float64))
    logger.info("Loaded %s: n=%d d=%d", path, ds.n, ds.d)
    return ds


def load_labeled_csv(
    path: PathLike,
    label_column: int = -1,
    has_header: bool = False,
    delimiter: Optional[str] = ",",
    classes: Optional[Iterable[int]] = None,
) -> Tuple[Dataset, Labeling]:
    """Like load_csv, but one column holds an integer class label.

    Rows whose class is not in `classes` are dropped (when given).
    """
    rows = _read_rows(path, has_header, delimiter)
    width = len(rows[0][1])
    if width < 2:
        raise FormatError(f"{path}: a labelled file needs at least two columns")
    col = label_column % width

    points, truth = [], []
    for lineno, cells in rows:
        lab = _parse_float(cells[col], path, lineno)
        if lab != int(lab) or lab < 0:
            raise ParseError(f"{path}: line {lineno}: class label must be a non-negative integer")
        points.append([_parse_float(c, path, lineno) for j, c in enumerate(cells) if j != col])
        truth.append(int(lab))

    points_arr = np.asarray(points, dtype=np.float64)
    truth_arr = np.asarray(truth, dtype=np.int64)
    if classes is not None:
        keep = np.isin(truth_arr, np.asarray(list(classes), dtype=np.int64))
        if not keep.any():
            raise EmptyInputError(f"{path}: no rows belong to classes {list(classes)}")
        points_arr, truth_arr = points_arr[keep], truth_arr[keep]
    ds = Dataset(points_arr)
    logger.info("Loaded labelled %s: n=%d d=%d classes=%d", path, ds.n, ds.d, np.unique(truth_arr).size)
    return ds, Labeling(truth_arr)


def write_csv(ds: Dataset, path: PathLike, header: Optional[Sequence[str]] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in ds.points.tolist():
            writer.writerow([repr(float(v)) for v in row])


def synth_spiral(n_per_arm: int, arms: int, noise_sd: float = 0.0, seed: int = 0) -> Dataset:
    """Interleaved Archimedean arms r = 1 + θ, sampled at equal arc length.

    Each arm sweeps 1.5 turns; arm a is rotated by 2πa/arms. Rows are
    arm-major, so spiral_arm_labels() gives the generating partition.
    """
    if n_per_arm < 1 or arms < 1:
        raise ParameterError("n_per_arm and arms must be ≥ 1")
    if noise_sd < 0:
        raise ParameterError("noise_sd must be ≥ 0")
    rng = np.random.default_rng(seed)

    max_theta = 3.0 * np.pi
    # arc length of r = 1 + θ is ~ θ + θ²/2; invert it for even spacing
    total_arc = max_theta + max_theta ** 2 / 2.0
    t = np.linspace(0.0, 1.0, n_per_arm)
    theta = np.sqrt(1.0 + 2.0 * t * total_arc) - 1.0
    radius = 1.0 + theta

    blocks = []
    for a in range(arms):
        phi = theta + 2.0 * np.pi * a / arms
        blocks.append(np.column_stack([radius * np.cos(phi), radius * np.sin(phi)]))
    points = np.vstack(blocks)
    if noise_sd > 0:
        points = points + rng.normal(0.0, noise_sd, size=points.shape)
    return Dataset(points)


def spiral_arm_labels(n_per_arm: int, arms: int) -> Labeling:
    return Labeling(np.repeat(np.arange(arms, dtype=np.int64), n_per_arm))


def synth_blobs(
    centers: Sequence[Sequence[float]], n_per_center: int, sd: float, seed: int = 0
) -> Tuple[Dataset, Labeling]:
    """Isotropic Gaussian samples around each center, plus the true partition."""
    if len(centers) == 0:
        raise EmptyInputError("at least one center is required")
    dims = {len(c) for c in centers}
    if len(dims) != 1:
        raise DimensionError(f"centers have mismatched dimensions {sorted(dims)}")
    if n_per_center < 1:
        raise ParameterError("n_per_center must be ≥ 1")
    if sd < 0:
        raise ParameterError("sd must be ≥ 0")
    rng = np.random.default_rng(seed)

    c = np.asarray(centers, dtype=np.float64)
    points = np.repeat(c, n_per_center, axis=0)
    if sd > 0:
        points = points + rng.normal(0.0, sd, size=points.shape)
    truth = np.repeat(np.arange(len(c), dtype=np.int64), n_per_center)
    return Dataset(points), Labeling(truth)


def synth_fuzzy(
    centers: Sequence[Sequence[float]],
    n_per_center: int,
    sd: Union[float, Sequence[float]],
    n_noise: int,
    seed: int = 0,
    stretch: Optional[Sequence[Sequence[float]]] = None,
    margin: float = 0.1,
    clearance: float = 0.0,
) -> Tuple[Dataset, Labeling]:
    """Gaussian blobs with uniform background noise.

    `sd` may be a scalar or one value per center; `stretch` gives per-center
    axis scale factors to elongate blobs. Noise is drawn uniformly from the
    blobs' bounding box widened by `margin` on every side and carries the
    noise label k in the returned partition. With `clearance` > 0 every noise
    point lies at least that far from every other point.
    """
    if len(centers) == 0:
        raise EmptyInputError("at least one center is required")
    dims = {len(c) for c in centers}
    if len(dims) != 1:
        raise DimensionError(f"centers have mismatched dimensions {sorted(dims)}")
    if n_per_center < 1 or n_noise < 0:
        raise ParameterError("n_per_center must be ≥ 1 and n_noise ≥ 0")
    c = np.asarray(centers, dtype=np.float64)
    k, d = c.shape
    sds = np.broadcast_to(np.asarray(sd, dtype=np.float64), (k,))
    if (sds < 0).any():
        raise ParameterError("sd must be ≥ 0")
    if clearance < 0:
        raise ParameterError("clearance must be ≥ 0")
    scale = np.ones((k, d)) if stretch is None else np.asarray(stretch, dtype=np.float64)
    if scale.shape != (k, d):
        raise DimensionError(f"stretch must have shape ({k}, {d})")

    rng = np.random.default_rng(seed)
    blocks = [c[i] + rng.normal(0.0, 1.0, size=(n_per_center, d)) * sds[i] * scale[i] for i in range(k)]
    points = np.vstack(blocks)
    truth = np.repeat(np.arange(k, dtype=np.int64), n_per_center)

    if n_noise:
        lo, hi = points.min(axis=0), points.max(axis=0)
        pad = (hi - lo) * margin
        if clearance > 0:
            noise = _spaced_noise(rng, lo - pad, hi + pad, n_noise, points, clearance)
        else:
            noise = rng.uniform(lo - pad, hi + pad, size=(n_noise, d))
        points = np.vstack([points, noise])
        truth = np.concatenate([truth, np.full(n_noise, k, dtype=np.int64)])
        return Dataset(points), Labeling(truth, noise_label=k)
    return Dataset(points), Labeling(truth)


def load_sklearn_digits(classes: Iterable[int] = range(6)) -> Tuple[Dataset, Labeling]:
    """Raw 8×8 pixel digits (64-d) restricted to the given classes."""
    from sklearn.datasets import load_digits

    bunch = load_digits()
    keep = np.isin(bunch.target, np.asarray(list(classes)))
    ds = Dataset(bunch.data[keep].astype(np.float64))
    logger.info("Loaded scikit-learn digits: n=%d d=%d", ds.n, ds.d)
    return ds, Labeling(bunch.target[keep].astype(np.int64))


def pairwise_distances(ds: Dataset) -> np.ndarray:
    """Full symmetric n×n Euclidean distance matrix with a zero diagonal."""
    if ds.n == 1:
        return np.zeros((1, 1))
    return squareform(pdist(ds.points, metric="euclidean"))


def distance(ds: Dataset, i: int, j: int) -> float:
    return float(np.linalg.norm(ds.points[i] - ds.points[j]))


# candidate batches tried by _spaced_noise before giving up
MAX_NOISE_BATCHES = 200


def _spaced_noise(
    rng: np.random.Generator,
    lo: np.ndarray,
    hi: np.ndarray,
    n_noise: int,
    blobs: np.ndarray,
    clearance: float,
) -> np.ndarray:
    blob_tree = cKDTree(blobs)
    accepted: List[np.ndarray] = []
    for _ in range(MAX_NOISE_BATCHES):
        candidates = rng.uniform(lo, hi, size=(max(n_noise, 16), len(lo)))
        dist, _ = blob_tree.query(candidates, k=1)
        for point in candidates[dist >= clearance]:
            if accepted and np.min(np.linalg.norm(np.asarray(accepted) - point, axis=1)) < clearance:
                continue
            accepted.append(point)
            if len(accepted) == n_noise:
                return np.asarray(accepted)
    logger.warning("placed %d of %d noise points at clearance %g", len(accepted), n_noise, clearance)
    raise ParameterError(f"cannot place {n_noise} noise points at clearance {clearance:g}; widen margin")
