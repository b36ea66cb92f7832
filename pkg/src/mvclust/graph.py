"""Similarity-graph construction for one view.

Data matrices follow the column-sample convention: a view is a ``(d, n)``
array whose columns are the ``n`` samples.  The central construction is the
adaptive-neighbor graph: each row of the similarity matrix solves

    min_s  sum_j d_ij * s_j + gamma_i * ||s||^2   s.t.  s >= 0, sum(s) = 1

with the per-row regularizer ``gamma_i`` picked so that exactly the ``k``
nearest neighbors receive positive weight.  The closed form needs nothing
beyond a row-wise sort of the distances.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "pairwise_sq_dist",
    "NeighborDuals",
    "adaptive_rows",
    "adaptive_neighbor_graph",
    "kernel_graph",
    "normalize_affinity",
]


def pairwise_sq_dist(x):
    """Squared Euclidean distances between the columns of ``x``.

    Returns a symmetric ``(n, n)`` matrix with zero diagonal; round-off
    negatives are clamped at zero.
    """
    x = np.asarray(x, dtype=float)
    gram = x.T @ x
    sq = np.diag(gram).copy()
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    np.maximum(d2, 0.0, out=d2)
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    return d2


@dataclass
class NeighborDuals:
    """Per-row multipliers of the adaptive-neighbor program.

    ``eta`` is the simplex multiplier, ``gamma_row`` the per-row quadratic
    regularizer and ``gamma_mean`` their mean, which downstream stages use
    as the scale of the graph.  Degenerate rows (all candidate distances
    tied) have ``gamma_row == 0`` and ``eta == inf``.
    """

    eta: np.ndarray
    gamma_row: np.ndarray
    gamma_mean: float


def adaptive_rows(dist, k):
    """Row-wise adaptive-neighbor weights for a precomputed distance matrix.

    ``dist`` must be symmetric, non-negative, with zero diagonal.  The i-th
    row of the result puts weight ``(d_(k+1) - d_(j)) / (k d_(k+1) - sum_k d)``
    on its j-th nearest neighbor and zero elsewhere, which sums to one and
    is the exact minimizer of the row program.  Distance ties are broken
    toward the smaller index.  When ``k == n - 1`` there is no (k+1)-th
    neighbor and the k-th distance doubles as the cutoff; when all cutoff
    candidates are tied (``gamma_row == 0``) the k chosen neighbors share
    uniform weight 1/k, the minimum-norm point of the solution set.

    Returns ``(weights, duals)`` with ``weights`` a CSR matrix holding at
    most ``k`` entries per row.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if dist.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not 1 <= k <= n - 1:
        raise ValueError("k must satisfy 1 <= k <= n - 1, got k=%d, n=%d" % (k, n))

    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")[:, : n - 1]
    dsort = np.take_along_axis(d, order, axis=1)

    dk = dsort[:, :k]
    # cutoff distance: the (k+1)-th neighbor, or the k-th when k == n - 1
    cutoff = dsort[:, k] if k < n - 1 else dsort[:, k - 1]
    ksum = dk.sum(axis=1)
    gamma_row = 0.5 * (k * cutoff - ksum)
    np.maximum(gamma_row, 0.0, out=gamma_row)

    degenerate = gamma_row <= 0.0
    denom = np.where(degenerate, 1.0, 2.0 * gamma_row)
    vals = np.where(degenerate[:, None], 1.0 / k, (cutoff[:, None] - dk) / denom[:, None])
    np.maximum(vals, 0.0, out=vals)

    eta = np.where(degenerate, np.inf, 1.0 / k + ksum / (k * denom))
    gamma_mean = float(gamma_row.mean())

    indptr = np.arange(n + 1) * k
    weights = sp.csr_matrix(
        (vals.ravel(), order[:, :k].ravel(), indptr), shape=(n, n)
    )
    weights.eliminate_zeros()
    return weights, NeighborDuals(eta=eta, gamma_row=gamma_row, gamma_mean=gamma_mean)


def adaptive_neighbor_graph(x, k):
    """Adaptive-neighbor similarity graph of a ``(d, n)`` view matrix.

    Returns ``(weights, duals)``; rows of ``weights`` live on the
    probability simplex and have at most ``k`` nonzeros.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("view matrix must be (d, n) with n >= 2")
    if not np.isfinite(x).all():
        raise ValueError("view matrix contains non-finite entries")
    return adaptive_rows(pairwise_sq_dist(x), k)


def kernel_graph(x, kind, scale=1.0):
    """Dense similarity matrix under one of the standard kernels.

    ``kind`` is one of ``gaussian`` (``exp(-d^2 / (2 * scale))``),
    ``cosine``, ``euclidean`` (raw distances) or ``binary`` (all ones).
    Provided for ablation; the pipeline itself uses the adaptive graph.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    if kind == "binary":
        return np.ones((n, n))
    if kind == "euclidean":
        return np.sqrt(pairwise_sq_dist(x))
    if kind == "gaussian":
        if scale <= 0:
            raise ValueError("gaussian kernel needs a positive scale")
        return np.exp(-pairwise_sq_dist(x) / (2.0 * scale))
    if kind == "cosine":
        norms = np.linalg.norm(x, axis=0)
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            raise ValueError(
                "cosine kernel undefined: column %d has zero norm" % zero[0]
            )
        xn = x / norms
        return xn.T @ xn
    raise ValueError("unknown kernel kind %r" % (kind,))


def normalize_affinity(s, mode="symmetric"):
    """Degree-normalize a similarity matrix into a symmetric affinity.

    The default symmetrizes first, ``W = (S + S^T) / 2``, then applies
    ``D^{-1/2} W D^{-1/2}`` with ``D`` the diagonal of row sums of ``W``;
    the spectrum then lies in [-1, 1], which the eigenvector updates
    downstream rely on.  ``mode="literal"`` applies ``D^{-1/2} S D^{+1/2}``
    to the raw matrix instead (a similarity transform, kept for
    comparison runs).
    """
    if sp.issparse(s):
        s = s.toarray()
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    rowsum = s.sum(axis=1)
    dead = np.nonzero(rowsum <= 0.0)[0]
    if dead.size:
        raise ValueError("degenerate graph: row %d has no weight" % dead[0])
    if mode == "literal":
        root = np.sqrt(rowsum)
        return (s / root[:, None]) * root[None, :]
    if mode != "symmetric":
        raise ValueError("unknown normalization mode %r" % (mode,))
    w = 0.5 * (s + s.T)
    dinv = 1.0 / np.sqrt(w.sum(axis=1))
    a = dinv[:, None] * w * dinv[None, :]
    return 0.5 * (a + a.T)
