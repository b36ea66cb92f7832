"""End-to-end clustering pipeline.

Stages run in a fixed order: adaptive-neighbor graph per view, affinity
normalization, the alternating embedding stage, the consensus graph, and
label extraction.  When the consensus graph already splits into exactly
``c`` components the component ids are the labels; otherwise k-means (with
restarts) runs on the rotation rows.  The k-means seeding is the only
source of randomness.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import consensus, embedding, graph, metrics

logger = logging.getLogger(__name__)

KMEANS_TARGETS = ("rotation", "stacked")


@dataclass
class PipelineConfig:
    """Every tunable of a pipeline run.

    ``lam`` defaults to ``1 / sqrt(n)`` of the dataset when left ``None``.
    ``consensus_k`` overrides the neighbor count of the final stage;
    ``kmeans_on`` picks the k-means input (rotation rows, or the stacked
    normalized embeddings) for graphs that do not split cleanly.
    """

    clusters: int
    k: int = 15
    gamma: float = 0.1
    lam: float | None = None
    rho: float = 1e-3
    eps: float = 1e-6
    max_iter: int = 100
    kmeans_restarts: int = 20
    norm_mode: str = "t-gamma"
    seed: int = 0
    consensus_k: int | None = None
    affinity_mode: str = "symmetric"
    kmeans_on: str = "rotation"
    weights: np.ndarray | None = None
    fp_max_iter: int = 50
    fp_tol: float = 1e-10

    def __post_init__(self):
        if self.clusters < 2:
            raise ValueError("clusters must be at least 2")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.gamma <= 0 or self.rho <= 0 or self.eps <= 0:
            raise ValueError("gamma, rho and eps must be positive")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_iter < 1 or self.kmeans_restarts < 1:
            raise ValueError("max_iter and kmeans_restarts must be at least 1")
        if self.norm_mode not in embedding.NORM_MODES:
            raise ValueError(
                "norm_mode must be one of %s" % (embedding.NORM_MODES,)
            )
        if self.kmeans_on not in KMEANS_TARGETS:
            raise ValueError("kmeans_on must be one of %s" % (KMEANS_TARGETS,))

    def resolve(self, n):
        """Validate against the dataset size and fill the lam default."""
        if not 1 <= self.k < n:
            raise ValueError("k=%d out of range for n=%d" % (self.k, n))
        if self.consensus_k is not None and not 1 <= self.consensus_k < n:
            raise ValueError("consensus_k out of range for n=%d" % n)
        if not 2 <= self.clusters < n:
            raise ValueError("clusters=%d out of range for n=%d" % (self.clusters, n))
        lam = self.lam if self.lam is not None else 1.0 / np.sqrt(n)
        return lam


@dataclass
class PipelineResult:
    labels: np.ndarray
    consensus_graph: object
    rotation: np.ndarray
    fbars: list
    embedding_trace: list
    consensus_trace: dict
    converged: dict
    metrics: dict | None
    timings: dict
    config: PipelineConfig
    used_kmeans: bool = False


def convergence_check(obj_prev, obj_curr, eps):
    """Relative-change stopping rule ``|curr - prev| / |prev| < eps``.

    Falls back to the absolute change when the previous value is zero.
    """
    if obj_prev == 0.0:
        return abs(obj_curr - obj_prev) < eps
    return abs(obj_curr - obj_prev) / abs(obj_prev) < eps


def _plus_plus_init(points, c, rng):
    n = points.shape[0]
    centers = np.empty((c, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, c):
        total = d2.sum()
        if total <= 0.0:
            centers[j] = points[rng.integers(n)]
            continue
        centers[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(points, centers, max_iter=300):
    labels = None
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        assigned_d2 = d2[np.arange(len(new_labels)), new_labels].copy()
        for j in range(centers.shape[0]):
            members = new_labels == j
            if members.any():
                centers[j] = points[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its center
                far = assigned_d2.argmax()
                centers[j] = points[far]
                new_labels[far] = j
                assigned_d2[far] = -1.0  # a second empty cluster picks elsewhere
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(labels)), labels].sum())
    return labels, inertia


def kmeans(points, c, restarts=20, seed=0):
    """Best-of-``restarts`` Lloyd clustering; returns ``(labels, inertia)``.

    Seeding is distance-weighted (each new center drawn proportionally to
    the squared distance from the chosen ones); the run with the lowest
    within-cluster sum of squares wins.  Deterministic for a fixed seed.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[0] < c:
        raise ValueError("need at least c points for k-means")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = _plus_plus_init(points, c, rng)
        labels, inertia = _lloyd(points, centers.copy())
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels, best_inertia


def extract_labels(s, q, c, cfg, fbars=None):
    """Labels from the consensus graph, or from k-means when it is needed.

    If the graph has exactly ``c`` connected components the component ids
    are returned directly (no randomness involved).  Otherwise k-means with
    ``cfg.kmeans_restarts`` restarts runs on the rotation rows (or the
    stacked normalized embeddings, per ``cfg.kmeans_on``).

    Returns ``(labels, used_kmeans)``.
    """
    ncomp, comp_labels = consensus.component_labels(s)
    if ncomp == c:
        return comp_labels.astype(np.int64), False
    if cfg.kmeans_on == "stacked":
        if fbars is None:
            raise ValueError("stacked k-means target needs the embeddings")
        points = np.hstack(fbars)
    else:
        points = q
    labels, _ = kmeans(points, c, restarts=cfg.kmeans_restarts, seed=cfg.seed)
    return labels.astype(np.int64), True


@contextmanager
def _stage(timings, name):
    """Time a stage; failures propagate with the stage named."""
    t0 = time.perf_counter()
    try:
        yield
    except Exception as err:
        raise RuntimeError("stage %r failed: %s" % (name, err)) from err
    finally:
        timings[name] = time.perf_counter() - t0


def run_pipeline(data, cfg):
    """Run all stages on a multi-view dataset; returns a PipelineResult."""
    n = data.n_samples
    lam = cfg.resolve(n)
    timings = {}

    with _stage(timings, "graphs"):
        graphs = [graph.adaptive_neighbor_graph(x, cfg.k)[0] for x in data.views]

    with _stage(timings, "normalize"):
        affinities = [
            graph.normalize_affinity(s, mode=cfg.affinity_mode) for s in graphs
        ]

    with _stage(timings, "embedding"):
        emb_cfg = embedding.EmbeddingConfig(
            lam=lam,
            rho=cfg.rho,
            gamma=cfg.gamma,
            max_iter=cfg.max_iter,
            tol=cfg.eps,
            norm_mode=cfg.norm_mode,
            weights=cfg.weights,
            fp_max_iter=cfg.fp_max_iter,
            fp_tol=cfg.fp_tol,
        )
        emb = embedding.fit_embeddings(affinities, cfg.clusters, emb_cfg)

    with _stage(timings, "consensus"):
        cons = consensus.fit_consensus(
            emb.fbars,
            cfg.consensus_k if cfg.consensus_k is not None else cfg.k,
            cfg.clusters,
            max_iter=cfg.max_iter,
            tol=cfg.eps,
        )

    with _stage(timings, "labels"):
        labels, used_kmeans = extract_labels(
            cons.graph, cons.rotation, cfg.clusters, cfg, fbars=emb.fbars
        )

    scores = None
    if data.labels is not None:
        scores = metrics.evaluate_all(labels, data.labels)

    return PipelineResult(
        labels=labels,
        consensus_graph=cons.graph,
        rotation=cons.rotation,
        fbars=emb.fbars,
        embedding_trace=emb.objective_trace,
        consensus_trace={
            "objective": cons.objective_trace,
            "lam": cons.lam_trace,
            "components": cons.component_trace,
        },
        converged={
            "embedding": emb.converged,
            "consensus": cons.converged,
            "components": cons.n_components,
        },
        metrics=scores,
        timings=timings,
        config=cfg,
        used_kmeans=used_kmeans,
    )
