"""Joint spectral embedding and low-rank tensor fitting.

Given the normalized affinities of all views, this stage alternates between

* per-view embeddings ``F`` with orthonormal columns, obtained as the top
  eigenvectors of a symmetric update matrix (trace maximization on the
  Stiefel manifold), and
* a low-rank tensor ``T`` approximating the stacked Gram matrices of the
  row-normalized embeddings, obtained from a spectral proximal step.

The update matrix for ``F`` depends on the previous iterate's normalized
rows (Picard linearization); the very first sweep has no previous iterate
and uses the affinity term alone.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import tensor

logger = logging.getLogger(__name__)

#: rows with a norm below this are treated as zero when normalizing
ZERO_ROW_TOL = 1e-12

NORM_MODES = ("t-gamma", "weighted-tnn", "tnn")


@dataclass
class EmbeddingConfig:
    """Knobs of the alternating embedding stage.

    ``lam`` weighs the affinity trace term, ``rho`` the low-rank penalty and
    ``gamma`` its shape; ``norm_mode`` selects the non-convex penalty
    (``t-gamma``) or the convex baselines (``tnn`` and ``weighted-tnn``
    with per-index ``weights``).
    """

    lam: float
    rho: float
    gamma: float = 0.1
    max_iter: int = 100
    tol: float = 1e-6
    norm_mode: str = "t-gamma"
    weights: np.ndarray | None = None
    fp_max_iter: int = 50
    fp_tol: float = 1e-10

    def __post_init__(self):
        if self.lam <= 0 or self.rho <= 0 or self.gamma <= 0 or self.tol <= 0:
            raise ValueError("lam, rho, gamma and tol must be positive")
        if self.norm_mode not in NORM_MODES:
            raise ValueError(
                "norm_mode must be one of %s, got %r" % (NORM_MODES, self.norm_mode)
            )


@dataclass
class EmbeddingResult:
    fbars: list
    low_rank: np.ndarray
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    n_iter: int = 0


def top_eigenvectors(h, c):
    """Orthonormal eigenvectors for the ``c`` largest eigenvalues of ``h``.

    This maximizes ``tr(F^T h F)`` over matrices with orthonormal columns.
    A (near-)degenerate gap between eigenvalues ``c`` and ``c+1`` makes the
    maximizer non-unique; the eigensolver's deterministic ordering is kept
    and the degeneracy logged.
    """
    h = np.asarray(h, dtype=float)
    try:
        vals, vecs = np.linalg.eigh(0.5 * (h + h.T))
    except np.linalg.LinAlgError as err:
        raise ValueError("eigendecomposition failed") from err
    n = h.shape[0]
    if c < n and vals[n - c] - vals[n - c - 1] < 1e-12:
        logger.debug("eigenvalue gap at cut %d is degenerate", c)
    return vecs[:, ::-1][:, :c]


def normalize_rows(f, fallback=None):
    """Scale rows of ``f`` to unit norm; returns ``(p_diag, fbar)``.

    ``p_diag`` holds the reciprocal row norms.  A numerically zero row has
    no direction; it is replaced by the matching row of ``fallback`` (the
    previous iterate) or by the uniform unit row when there is none, with
    ``p_diag`` set to 1 for that row.
    """
    f = np.asarray(f, dtype=float)
    norms = np.linalg.norm(f, axis=1)
    dead = norms < ZERO_ROW_TOL
    p_diag = 1.0 / np.where(dead, 1.0, norms)
    fbar = f * p_diag[:, None]
    if dead.any():
        logger.warning("replacing %d zero rows in embedding", int(dead.sum()))
        if fallback is not None:
            fbar[dead] = fallback[dead]
        else:
            fbar[dead] = 1.0 / np.sqrt(f.shape[1])
    return p_diag, fbar


def gram_tensor(fbars):
    """Stack the Gram matrices ``fbar @ fbar.T`` as lateral slices.

    The result has shape ``(n, V, n)``: slice ``[:, v, :]`` is the v-th
    Gram matrix, and the Fourier transform used by the low-rank step runs
    along the last (sample) axis, so its frontal slices are ``n x V``.
    """
    fbars = [np.asarray(fb, dtype=float) for fb in fbars]
    n, c = fbars[0].shape
    for fb in fbars:
        if fb.shape != (n, c):
            raise ValueError("all embeddings must share the same shape")
    out = np.empty((n, len(fbars), n))
    for v, fb in enumerate(fbars):
        out[:, v, :] = fb @ fb.T
    return out


def embedding_update_matrix(a, t_slice, fbar, p_diag, lam):
    """Symmetric matrix whose top eigenvectors give the next embedding.

    Combines the affinity with the previous iterate's low-rank slice and
    Gram correction, both conjugated by the diagonal of reciprocal row
    norms; symmetrized at the end to remove round-off skew.
    """
    pp = np.outer(p_diag, p_diag)
    h = lam * a + 0.5 * pp * (t_slice + t_slice.T) - 0.5 * pp * (fbar @ fbar.T)
    return 0.5 * (h + h.T)


def update_low_rank(ften, cfg):
    """Proximal step of the selected low-rank penalty applied to ``ften``."""
    if cfg.norm_mode == "t-gamma":
        return tensor.t_gamma_prox(
            ften, cfg.rho, cfg.gamma, fp_max_iter=cfg.fp_max_iter, fp_tol=cfg.fp_tol
        )
    weights = None if cfg.norm_mode == "tnn" else cfg.weights
    return tensor.weighted_tnn_prox(ften, cfg.rho, weights)


def _penalty(t, cfg):
    if cfg.norm_mode == "t-gamma":
        return cfg.rho * tensor.t_gamma_norm(t, cfg.gamma)
    r = min(t.shape[0], t.shape[1])
    w = np.ones(r) if cfg.norm_mode == "tnn" or cfg.weights is None else cfg.weights
    return cfg.rho * tensor.weighted_tnn(t, w)


def embedding_objective(fs, ften, t, a_list, cfg):
    """Value of the joint objective at the current iterates.

    ``- lam * sum_v tr(F^T A F) + 0.5 * ||ften - t||_F^2 + penalty(t)``.
    """
    trace_term = sum(
        float(np.trace(f.T @ a @ f)) for f, a in zip(fs, a_list, strict=True)
    )
    fit = 0.5 * float(((ften - t) ** 2).sum())
    return -cfg.lam * trace_term + fit + _penalty(t, cfg)


def fit_embeddings(a_list, c, cfg):
    """Alternate embedding and low-rank updates until the objective settles.

    Stops when the relative objective change drops below ``cfg.tol`` or
    after ``cfg.max_iter`` sweeps (reported through ``converged``).
    """
    a_list = [np.asarray(a, dtype=float) for a in a_list]
    n = a_list[0].shape[0]
    n_views = len(a_list)
    if n_views < 1:
        raise ValueError("need at least one view")
    for a in a_list:
        if a.shape != (n, n):
            raise ValueError("all affinities must be n x n over the same samples")

    low_rank = np.zeros((n, n_views, n))
    fbars = None
    p_diags = None
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        fs = []
        for v, a in enumerate(a_list):
            if fbars is None:
                h = cfg.lam * a
            else:
                h = embedding_update_matrix(
                    a, low_rank[:, v, :], fbars[v], p_diags[v], cfg.lam
                )
            fs.append(top_eigenvectors(h, c))
        prev_fbars = fbars
        p_diags, fbars = zip(
            *(
                normalize_rows(f, None if prev_fbars is None else prev_fbars[v])
                for v, f in enumerate(fs)
            )
        )
        fbars = list(fbars)
        ften = gram_tensor(fbars)
        low_rank = update_low_rank(ften, cfg)
        trace.append(embedding_objective(fs, ften, low_rank, a_list, cfg))
        if len(trace) >= 2:
            prev, curr = trace[-2], trace[-1]
            denom = abs(prev) if prev != 0.0 else 1.0
            if abs(curr - prev) / denom < cfg.tol:
                converged = True
                break
    if not converged:
        logger.info("embedding stage hit max_iter=%d without converging", cfg.max_iter)
    return EmbeddingResult(
        fbars=fbars,
        low_rank=low_rank,
        objective_trace=trace,
        converged=converged,
        n_iter=it,
    )
