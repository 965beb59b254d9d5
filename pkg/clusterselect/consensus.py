"""Consensus clustering by reclustering points.

Two points are as far apart as the number of ensemble members that put
them in different clusters (a Hamming distance over label vectors). The
consensus C* is an agglomerative clustering of that disagreement matrix.
"""
import csv
import logging
import os
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from .algorithms import LINKAGES, agglomerative, cut_merges, merge_sequence
from .config import DEFAULT_LINKAGE, resolve_threads
from .errors import DegenerateInputError, DimensionError, ParameterError
from .labeling import Labeling
from .metrics import anmi
from .parallel import parallel_map

logger = logging.getLogger("clusterselect.consensus")

# rows per worker slab in hamming_matrix
ROW_BLOCK = 256


@dataclass(frozen=True)
class CoAssociationMatrix:
    disagreements: np.ndarray
    m: int
    # unordered point pairs actually compared
    pairs_compared: int = 0

    @property
    def n(self) -> int:
        return int(self.disagreements.shape[0])


def _check_ensemble(ensemble: Sequence[Labeling]) -> int:
    if len(ensemble) == 0:
        raise DegenerateInputError("the ensemble is empty")
    n = ensemble[0].n
    for member in ensemble:
        if member.n != n:
            raise DimensionError(f"ensemble members have different lengths ({n} vs {member.n})")
    return n


def hamming_matrix(ensemble: Sequence[Labeling], threads: Optional[int] = None) -> CoAssociationMatrix:
    """Disagreement counts. Workers fill disjoint slabs of ROW_BLOCK rows, one member at a time."""
    n = _check_ensemble(ensemble)
    stacked = np.vstack([member.labels for member in ensemble])
    mat = np.zeros((n, n), dtype=np.int64)

    def fill(lo: int) -> None:
        hi = min(lo + ROW_BLOCK, n)
        slab = mat[lo:hi]
        for row in stacked:
            slab += row[lo:hi, None] != row[None, :]

    parallel_map(fill, range(0, n, ROW_BLOCK), resolve_threads(threads))
    return CoAssociationMatrix(disagreements=mat, m=len(ensemble), pairs_compared=n * (n - 1) // 2)


def consensus_clustering(
    ensemble: Sequence[Labeling],
    k_star: int,
    linkage: str = DEFAULT_LINKAGE,
    threads: Optional[int] = None,
) -> Labeling:
    n = _check_ensemble(ensemble)
    if not 1 <= k_star <= n:
        raise ParameterError(f"k_star must satisfy 1 ≤ k_star ≤ n, got {k_star} with n={n}")
    co = hamming_matrix(ensemble, threads)
    c_star = agglomerative(co.disagreements, k_star, linkage)
    logger.info("Consensus built: n=%d m=%d k*=%d linkage=%s", n, co.m, k_star, linkage)
    return c_star


def consensus_sweep(
    ensemble: Sequence[Labeling],
    k_stars: Iterable[int],
    linkage: str = DEFAULT_LINKAGE,
    threads: Optional[int] = None,
) -> Dict[int, Labeling]:
    """One merge sequence, cut at every requested k*."""
    n = _check_ensemble(ensemble)
    k_stars = sorted(set(int(k) for k in k_stars))
    if not k_stars:
        raise ParameterError("k_star sweep is empty")
    if k_stars[0] < 1 or k_stars[-1] > n:
        raise ParameterError(f"every k_star must satisfy 1 ≤ k_star ≤ n={n}")
    if linkage not in LINKAGES:
        raise ParameterError(f"linkage must be one of {', '.join(LINKAGES)}")
    co = hamming_matrix(ensemble, threads)
    merges = merge_sequence(co.disagreements, linkage, stop_at=k_stars[0])
    return {k: cut_merges(merges, n, k) for k in k_stars}


def evaluate_consensus(c_star: Labeling, ensemble: Sequence[Labeling]) -> float:
    """ANMI of the consensus against the whole ensemble."""
    _check_ensemble(ensemble)
    if c_star.n != ensemble[0].n:
        raise DimensionError(f"consensus has {c_star.n} points, ensemble members {ensemble[0].n}")
    return anmi(c_star, ensemble)


def write_matrix_csv(co: CoAssociationMatrix, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerows(co.disagreements.tolist())
