"""Hard clusterings and the contingency statistics between two of them.

A Labeling assigns one non-negative integer label per point. Label values
carry no meaning beyond grouping: two labelings that differ only by a
renaming of their labels compare equal.
"""
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DataIOError, DimensionError, EmptyInputError, DegenerateInputError, ParameterError, ParseError


@dataclass(frozen=True, eq=False)
class Labeling:
    labels: np.ndarray
    # label shared by all DBSCAN noise points, if any
    noise_label: Optional[int] = None

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 1:
            raise DimensionError(f"labels must be one-dimensional, got shape {arr.shape}")
        if arr.size == 0:
            raise EmptyInputError("a labeling needs at least one point")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.isfinite(arr)) or not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ParameterError("labels must be integers")
        arr = arr.astype(np.int64, copy=True)
        if (arr < 0).any():
            raise ParameterError("labels must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def k(self) -> int:
        return int(np.unique(self.labels).size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Labeling):
            return NotImplemented
        if other.n != self.n:
            return False
        return bool(np.array_equal(canonical_array(self.labels), canonical_array(other.labels)))

    def __hash__(self) -> int:
        return hash(canonical_array(self.labels).tobytes())

    def noise_count(self) -> int:
        if self.noise_label is None:
            return 0
        return int(np.count_nonzero(self.labels == self.noise_label))

    def tolist(self) -> list:
        return self.labels.tolist()


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    total: int
    # original label values behind each row / column, in first-appearance order
    row_labels: Tuple[int, ...] = ()
    col_labels: Tuple[int, ...] = ()

    @property
    def shape(self) -> Tuple[int, int]:
        return self.counts.shape


def canonical_array(labels: np.ndarray) -> np.ndarray:
    """Remap label values to 0..k-1 in order of first appearance."""
    uniq, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(uniq.size, dtype=np.int64)
    return rank[inverse.reshape(-1)]


def _first_appearance_values(labels: np.ndarray) -> Tuple[int, ...]:
    uniq, first = np.unique(labels, return_index=True)
    return tuple(int(v) for v in uniq[np.argsort(first, kind="stable")])


def canonicalize(a: Labeling) -> Labeling:
    canon = canonical_array(a.labels)
    noise = None
    if a.noise_label is not None:
        hits = np.flatnonzero(a.labels == a.noise_label)
        if hits.size:
            noise = int(canon[hits[0]])
    return Labeling(canon, noise_label=noise)


def as_labeling(value: Union[Labeling, Sequence[int], np.ndarray]) -> Labeling:
    return value if isinstance(value, Labeling) else Labeling(np.asarray(value))


def _check_same_length(a: Labeling, b: Labeling) -> None:
    if a.n != b.n:
        raise DimensionError(f"labelings have different lengths ({a.n} vs {b.n})")


def contingency(a: Labeling, b: Labeling) -> ContingencyTable:
    a, b = as_labeling(a), as_labeling(b)
    _check_same_length(a, b)
    ca = canonical_array(a.labels)
    cb = canonical_array(b.labels)
    ka = int(ca.max()) + 1
    kb = int(cb.max()) + 1
    counts = np.bincount(ca * kb + cb, minlength=ka * kb).reshape(ka, kb).astype(np.int64)
    return ContingencyTable(
        counts=counts,
        row_marginals=counts.sum(axis=1),
        col_marginals=counts.sum(axis=0),
        total=a.n,
        row_labels=_first_appearance_values(a.labels),
        col_labels=_first_appearance_values(b.labels),
    )


def _comb2(x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.int64)
    return int(np.sum(x * (x - 1) // 2))


def pair_counts_from_table(table: ContingencyTable) -> Tuple[int, int, int, int]:
    n = table.total
    total_pairs = n * (n - 1) // 2
    n11 = _comb2(table.counts)
    same_a = _comb2(table.row_marginals)
    same_b = _comb2(table.col_marginals)
    n10 = same_a - n11
    n01 = same_b - n11
    n00 = total_pairs - n11 - n10 - n01
    return n11, n00, n10, n01


def pair_counts(a: Labeling, b: Labeling) -> Tuple[int, int, int, int]:
    """(N11, N00, N10, N01) over all unordered point pairs.

    N11: same cluster in both, N00: different in both,
    N10: same in a but different in b, N01: the reverse.
    """
    a, b = as_labeling(a), as_labeling(b)
    _check_same_length(a, b)
    if a.n < 2:
        raise DegenerateInputError("pair counting needs at least two points")
    return pair_counts_from_table(contingency(a, b))


def write_labeling(labeling: Labeling, path: Union[str, os.PathLike]) -> None:
    canon = canonicalize(labeling)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for v in canon.labels.tolist():
            f.write(f"{v}\n")


def read_labeling(path: Union[str, os.PathLike]) -> Labeling:
    """Reads one integer per line, or a single comma-separated row."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [(i, ln.strip()) for i, ln in enumerate(f, start=1) if ln.strip()]
    except OSError as e:
        raise DataIOError(f"cannot read labeling {path}: {e}") from e
    if not lines:
        raise EmptyInputError(f"labeling file {path} is empty")

    if len(lines) == 1 and "," in lines[0][1]:
        lineno, row = lines[0]
        cells: Iterable[Tuple[int, str]] = ((lineno, c.strip()) for c in row.split(","))
    else:
        cells = lines

    values = []
    for lineno, cell in cells:
        try:
            values.append(int(cell))
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: not an integer label: {cell!r}") from None
    return Labeling(np.asarray(values, dtype=np.int64))
