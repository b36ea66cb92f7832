"""Consensus graph with a connected-components constraint.

The consensus similarity matrix is learned from the row-normalized view
embeddings by the same adaptive-neighbor row program used for the per-view
graphs, with one extra ingredient: a rotation block ``Q`` of the bottom
Laplacian eigenvectors couples into the distances and pushes the graph
toward exactly ``c`` connected components.  The number of components equals
the multiplicity of the Laplacian eigenvalue zero, so the coupling weight
``lam`` is doubled while the graph has too few components and halved while
it has too many.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .graph import adaptive_rows, pairwise_sq_dist

logger = logging.getLogger(__name__)

#: entries below this do not count as graph edges
SUPPORT_TOL = 1e-12

#: adaptive coupling weight is clamped to this range
LAM_RANGE = (1e-8, 1e8)


def graph_laplacian(s):
    """Unnormalized Laplacian of the symmetrized graph ``(S + S^T) / 2``."""
    if sp.issparse(s):
        s = s.toarray()
    w = 0.5 * (s + s.T)
    return np.diag(w.sum(axis=1)) - w


def bottom_eigenvectors(l, c):
    """Orthonormal eigenvectors for the ``c`` smallest eigenvalues of ``l``.

    Minimizes ``tr(Q^T l Q)`` over matrices with orthonormal columns.
    """
    l = np.asarray(l, dtype=float)
    try:
        _, vecs = np.linalg.eigh(0.5 * (l + l.T))
    except np.linalg.LinAlgError as err:
        raise ValueError("eigendecomposition failed") from err
    return vecs[:, :c]


def zero_eig_multiplicity(l, tol=1e-8):
    """Number of Laplacian eigenvalues that are zero up to scale.

    ``tol`` is relative to the largest eigenvalue, so the count does not
    change when the graph weights are rescaled.  For a valid Laplacian this
    equals the number of connected components.
    """
    vals = np.linalg.eigvalsh(0.5 * (np.asarray(l, dtype=float) + np.asarray(l, dtype=float).T))
    thr = tol * max(float(vals[-1]), 0.0)
    return int(np.count_nonzero(vals <= thr))


def component_labels(s, support_tol=SUPPORT_TOL):
    """Connected components of the support of the symmetrized graph.

    Returns ``(count, labels)``; an entry is an edge when it exceeds
    ``support_tol``.
    """
    if sp.issparse(s):
        s = s.toarray()
    w = 0.5 * (s + s.T)
    adj = sp.csr_matrix(w > support_tol)
    count, labels = connected_components(adj, directed=False)
    return int(count), labels


def fused_distances(fbars, q, lam):
    """Pairwise distances mixing embedding rows and rotation rows.

    ``d_ij = lam * ||q_i - q_j||^2 + sum_v ||fbar_i - fbar_j||^2``; the
    output is symmetric, non-negative, with zero diagonal.
    """
    d = lam * pairwise_sq_dist(np.asarray(q, dtype=float).T)
    for fb in fbars:
        d = d + pairwise_sq_dist(np.asarray(fb, dtype=float).T)
    return d


def neighbor_rows_from_distances(d, k):
    """Adaptive-neighbor rows on a precomputed distance matrix."""
    return adaptive_rows(d, k)


def consensus_objective(d, s, gamma_rows):
    """Row-program value ``sum d_ij s_ij + sum_i gamma_i ||s_i||^2``.

    The rotation coupling is already inside ``d``, so this is the quantity
    each sweep decreases.
    """
    if sp.issparse(s):
        s = s.toarray()
    return float((d * s).sum() + (gamma_rows * (s**2).sum(axis=1)).sum())


@dataclass
class ConsensusResult:
    graph: sp.csr_matrix
    rotation: np.ndarray
    converged: bool
    n_components: int
    n_iter: int
    objective_trace: list = field(default_factory=list)
    lam_trace: list = field(default_factory=list)
    component_trace: list = field(default_factory=list)


def fit_consensus(fbars, k, c, max_iter=100, tol=1e-6, lam=None):
    """Learn a consensus graph with exactly ``c`` connected components.

    The graph starts from the plain adaptive-neighbor solution on the
    summed embedding distances; each sweep recomputes the rotation from
    the current Laplacian, refreshes the fused distances and re-solves the
    rows.  ``lam`` starts at the mean row regularizer of the
    initialization (unless given) and is adapted by factors of two toward
    the target component count.

    Convergence means the component count equals ``c`` and the objective's
    relative change fell below ``tol``.  If ``max_iter`` sweeps pass
    without that, the result carries the iterate whose component count came
    closest to ``c`` and ``converged=False``.
    """
    fbars = [np.asarray(fb, dtype=float) for fb in fbars]
    n = fbars[0].shape[0]
    if not 1 <= c <= n:
        raise ValueError("cluster count must satisfy 1 <= c <= n")
    d0 = fused_distances(fbars, np.zeros((n, 1)), 0.0)
    s, duals = neighbor_rows_from_distances(d0, k)
    if lam is None:
        lam = duals.gamma_mean if duals.gamma_mean > 0 else 1.0
    obj = consensus_objective(d0, s, duals.gamma_row)

    result = ConsensusResult(
        graph=s, rotation=np.zeros((n, c)), converged=False,
        n_components=component_labels(s)[0], n_iter=0,
    )
    best_gap = np.inf
    for sweep in range(1, max_iter + 1):
        q = bottom_eigenvectors(graph_laplacian(s), c)
        d = fused_distances(fbars, q, lam)
        s, duals = neighbor_rows_from_distances(d, k)
        prev_obj, obj = obj, consensus_objective(d, s, duals.gamma_row)
        ncomp = component_labels(s)[0]

        result.objective_trace.append(obj)
        result.lam_trace.append(lam)
        result.component_trace.append(ncomp)
        gap = abs(ncomp - c)
        if gap <= best_gap:
            best_gap = gap
            result.graph, result.rotation = s, q
            result.n_components, result.n_iter = ncomp, sweep

        denom = abs(prev_obj) if prev_obj != 0.0 else 1.0
        if ncomp == c and abs(obj - prev_obj) / denom < tol:
            result.converged = True
            break
        if ncomp < c:
            lam = min(lam * 2.0, LAM_RANGE[1])
        elif ncomp > c:
            lam = max(lam / 2.0, LAM_RANGE[0])
    if not result.converged:
        logger.warning(
            "consensus stage stopped at %d components after %d sweeps (target %d)",
            result.n_components, len(result.lam_trace), c,
        )
    return result
