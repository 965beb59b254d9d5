"""Unsupervised hyperparameter selection for clustering via ensembles and consensus."""
from .algorithms import HyperparamConfig, agglomerative, dbscan, kmeans, meanshift, run_config
from .consensus import CoAssociationMatrix, consensus_clustering, evaluate_consensus, hamming_matrix
from .dataset import Dataset, load_csv, pairwise_distances, synth_blobs, synth_fuzzy, synth_spiral
from .errors import ClusterSelectError
from .labeling import ContingencyTable, Labeling, canonicalize, contingency, pair_counts
from .metrics import anmi, ari, chi, dunn1, dunn2, jaccard, nmi, rand, silhouette
from .search import Ensemble, Grid, SelectionResult, build_ensemble, select_anmi, select_best_match

__version__ = "0.1.0"
