"""Multi-view spectral clustering through a learned consensus graph.

The pipeline builds one adaptive-neighbor graph per view, jointly fits
spectral embeddings with a low-rank tensor coupling across views (using a
non-convex spectral penalty or convex nuclear-norm baselines), then learns
a consensus graph whose connected components are the clusters.
"""

from .consensus import ConsensusResult, fit_consensus
from .data import ManifestError, MultiViewDataset, generate_synthetic, load_dataset, save_dataset
from .embedding import EmbeddingConfig, EmbeddingResult, fit_embeddings
from .graph import adaptive_neighbor_graph, kernel_graph, normalize_affinity
from .metrics import accuracy, ari, evaluate_all, nmi, pairwise_prf, purity
from .pipeline import PipelineConfig, PipelineResult, kmeans, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "ConsensusResult",
    "EmbeddingConfig",
    "EmbeddingResult",
    "ManifestError",
    "MultiViewDataset",
    "PipelineConfig",
    "PipelineResult",
    "accuracy",
    "adaptive_neighbor_graph",
    "ari",
    "evaluate_all",
    "fit_consensus",
    "fit_embeddings",
    "generate_synthetic",
    "kernel_graph",
    "kmeans",
    "load_dataset",
    "nmi",
    "normalize_affinity",
    "pairwise_prf",
    "purity",
    "run_pipeline",
    "save_dataset",
]
