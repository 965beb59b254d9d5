"""Empirical cost of the two selection strategies over (n, m) sizes."""
import logging
import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .algorithms import HyperparamConfig
from .consensus import hamming_matrix
from .dataset import synth_blobs
from .errors import ParameterError
from .search import Ensemble, Grid, build_ensemble, select_anmi, select_best_match

logger = logging.getLogger("clusterselect.bench")

BENCH_HEADER = ["n", "m", "strategy1_seconds", "strategy2_seconds", "nmi_evaluations", "hamming_pairs"]


@dataclass(frozen=True)
class BenchRow:
    n: int
    m: int
    strategy1_seconds: float
    strategy2_seconds: float
    nmi_evaluations: int
    hamming_pairs: int

    def as_row(self) -> List[Any]:
        return [getattr(self, key) for key in BENCH_HEADER]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def bench_grid(m: int) -> Grid:
    """m k-means configs cycling k over 2..6 with distinct seeds."""
    return Grid(tuple(HyperparamConfig("kmeans", {"k": 2 + i % 5, "seed": i}) for i in range(m)))


def bench_dataset(n: int, seed: int = 0):
    centers = [[0.0, 0.0], [6.0, 0.0], [3.0, 5.0]]
    per = -(-n // len(centers))
    ds, _ = synth_blobs(centers, per, sd=1.0, seed=seed)
    return ds.take(np.arange(n))


def complexity_bench(
    n_list: Sequence[int],
    m_list: Sequence[int],
    k_star: int = 3,
    seed: int = 0,
    threads: Optional[int] = None,
) -> List[BenchRow]:
    """Times Strategy 1 and Strategy 2 for every (n, m) pair.

    Operation counts come from the instrumented code paths: pairwise NMI
    evaluations for Strategy 1, compared point pairs for the Hamming matrix.
    """
    if not n_list or not m_list:
        raise ParameterError("n_list and m_list must be non-empty")
    if min(n_list) < max(k_star, 6) or min(m_list) < 2:
        raise ParameterError(f"need n ≥ {max(k_star, 6)} and m ≥ 2")

    rows = []
    for n in n_list:
        ds = bench_dataset(n, seed)
        for m in m_list:
            ens: Ensemble = build_ensemble(ds, bench_grid(m), threads)

            t0 = time.perf_counter()
            first = select_anmi(ens, threads)
            t1 = time.perf_counter()
            select_best_match(ens, k_star, threads=threads)
            t2 = time.perf_counter()

            pairs = hamming_matrix(ens.labelings, threads).pairs_compared
            row = BenchRow(n, m, t1 - t0, t2 - t1, first.nmi_evaluations, pairs)
            logger.info("bench n=%d m=%d: strategy1 %.4fs strategy2 %.4fs", n, m, row.strategy1_seconds,
                        row.strategy2_seconds)
            rows.append(row)
    return rows
