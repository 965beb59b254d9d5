import numpy as np

from clusterselect.algorithms import HyperparamConfig
from clusterselect.labeling import Labeling
from clusterselect.search import Ensemble


def random_labeling(rng: np.random.Generator, n: int, k_max: int) -> Labeling:
    return Labeling(rng.integers(0, rng.integers(1, k_max + 1), size=n))


def permute_labels(rng: np.random.Generator, lab: Labeling) -> Labeling:
    """Same partition under a random injective renaming of the label values."""
    values = np.unique(lab.labels)
    new = rng.permutation(np.arange(values.size) * 3 + 5)
    mapping = dict(zip(values.tolist(), new.tolist()))
    return Labeling(np.array([mapping[v] for v in lab.labels.tolist()]))


def make_ensemble(labelings):
    """Ensemble of k-means configs named m0, m1, ... wrapping the given labelings."""
    configs = [HyperparamConfig("kmeans", {"k": 2, "seed": i}, display_name=f"m{i}") for i in range(len(labelings))]
    return Ensemble(list(zip(configs, labelings)), dataset_fingerprint="abc")


def set_partitions(n: int):
    """Every partition of n points once, as a restricted growth string."""
    if n == 0:
        yield ()
        return

    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            yield from grow(prefix + [v], max(top, v))

    yield from grow([0], 0)
