"""Third-order tensor algebra under the t-product.

A third-order tensor is a dense real ``numpy`` array of shape
``(n1, n2, n3)``.  The frontal slice ``k`` is ``x[:, :, k]`` and the layout
is C order over ``(n1, n2, n3)``, so serialized bytes are reproducible.
All transforms along the tube (third) axis use the unnormalized DFT, which
makes the slice-wise product in the Fourier domain equal to the
block-circulant matrix product in the spatial domain.

Singular-value work is done once per Fourier slice.  For real input the
Fourier slices come in conjugate pairs, so only slices ``0 .. n3 // 2`` are
factorized; their mirrors are filled in by conjugation.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

#: frontal slices j and n3 - j of fft(x, axis=2) are conjugates for real x
_IMAG_TOL = 1e-6


def fft_mode3(x):
    """DFT of every tube ``x[i, j, :]``; returns a complex tensor."""
    return np.fft.fft(np.asarray(x), axis=2)


def ifft_mode3(xhat, imag_tol=_IMAG_TOL):
    """Inverse of :func:`fft_mode3`, returning a real tensor.

    The input must be (numerically) conjugate-symmetric along the third
    axis.  Imaginary residue below ``imag_tol`` is dropped; anything larger
    indicates the symmetry was broken upstream and raises ``ValueError``.
    """
    out = np.fft.ifft(np.asarray(xhat, dtype=complex), axis=2)
    resid = np.abs(out.imag).max() if out.size else 0.0
    if resid > imag_tol:
        raise ValueError(
            "inverse FFT left imaginary residue %.3e > %.1e; input is not "
            "conjugate-symmetric along mode 3" % (resid, imag_tol)
        )
    return out.real


def t_product(a, b):
    """t-product of tensors of shapes ``(n1, m, n3)`` and ``(m, n2, n3)``.

    Equals slice-wise matrix multiplication in the Fourier domain, or
    equivalently the block-circulant unfold/multiply/fold product.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 3 or b.ndim != 3:
        raise ValueError("t_product expects third-order tensors")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(
            "t_product dimension mismatch: %s * %s" % (a.shape, b.shape)
        )
    ah = np.moveaxis(np.fft.fft(a, axis=2), 2, 0)
    bh = np.moveaxis(np.fft.fft(b, axis=2), 2, 0)
    return ifft_mode3(np.moveaxis(ah @ bh, 0, 2))


def t_transpose(x):
    """Transpose every frontal slice, then reverse the order of slices 2..n3."""
    xt = np.asarray(x).transpose(1, 0, 2)
    return np.concatenate([xt[:, :, :1], xt[:, :, :0:-1]], axis=2)


def t_identity(n, n3):
    """Identity tensor for the t-product: first frontal slice I, rest zero."""
    e = np.zeros((n, n, n3))
    e[:, :, 0] = np.eye(n)
    return e


def _fourier_svd(x):
    """Economy SVD of every Fourier-domain frontal slice of a real tensor.

    Returns ``(uh, sh, vh)`` with ``uh`` of shape ``(n1, r, n3)``, ``vh`` of
    shape ``(n2, r, n3)`` (both complex) and ``sh`` of shape ``(r, n3)``
    holding the non-negative singular values, ``r = min(n1, n2)``.  Only the
    first ``n3 // 2 + 1`` slices are factorized; the rest are conjugate
    mirrors.
    """
    x = np.asarray(x, dtype=float)
    n1, n2, n3 = x.shape
    r = min(n1, n2)
    xh = np.fft.fft(x, axis=2)
    uh = np.empty((n1, r, n3), dtype=complex)
    vh = np.empty((n2, r, n3), dtype=complex)
    sh = np.empty((r, n3))
    half = n3 // 2 + 1
    for k in range(half):
        try:
            u, s, vt = np.linalg.svd(xh[:, :, k], full_matrices=False)
        except np.linalg.LinAlgError as err:
            raise ValueError(
                "SVD failed to converge on Fourier slice %d" % k
            ) from err
        uh[:, :, k] = u
        sh[:, k] = s
        vh[:, :, k] = vt.conj().T
    for k in range(half, n3):
        uh[:, :, k] = uh[:, :, n3 - k].conj()
        vh[:, :, k] = vh[:, :, n3 - k].conj()
        sh[:, k] = sh[:, n3 - k]
    return uh, sh, vh


def fourier_singular_values(x):
    """Singular values of every Fourier slice, shape ``(min(n1, n2), n3)``."""
    x = np.asarray(x, dtype=float)
    n1, n2, n3 = x.shape
    sh = np.empty((min(n1, n2), n3))
    half = n3 // 2 + 1
    xh = np.fft.fft(x, axis=2)
    for k in range(half):
        sh[:, k] = np.linalg.svd(xh[:, :, k], compute_uv=False)
    for k in range(half, n3):
        sh[:, k] = sh[:, n3 - k]
    return sh


def _assemble_from_fourier_svd(uh, omega, vh):
    """Rebuild a real tensor from Fourier factors and new singular values."""
    th = np.einsum("irk,rk,jrk->ijk", uh, omega.astype(complex), vh.conj())
    return ifft_mode3(th)


def t_svd(x):
    """Economy t-SVD ``x = u * s * t_transpose(v)``.

    Returns ``(u, s, v)`` real tensors of shapes ``(n1, r, n3)``,
    ``(r, r, n3)`` and ``(n2, r, n3)`` with ``r = min(n1, n2)``.  In the
    Fourier domain the slices of ``u`` and ``v`` have orthonormal columns
    and ``s`` is diagonal with non-negative, non-increasing entries.
    """
    uh, sh, vh = _fourier_svd(x)
    r, n3 = sh.shape
    shten = np.zeros((r, r, n3), dtype=complex)
    shten[np.arange(r), np.arange(r), :] = sh
    u = ifft_mode3(uh)
    s = ifft_mode3(shten)
    v = ifft_mode3(vh)
    return u, s, v


def frobenius_norm(x):
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(x, dtype=float).ravel()))


def tensor_nuclear_norm(x):
    """Sum of matrix nuclear norms over all Fourier-domain frontal slices."""
    return float(fourier_singular_values(x).sum())


def weighted_tnn(x, weights):
    """Weighted tensor nuclear norm ``sum_k sum_j w_j * sigma_j(slice k)``.

    ``weights`` must have length ``min(n1, n2)`` and be non-negative; the
    j-th weight multiplies the j-th largest singular value of every Fourier
    slice.
    """
    sh = fourier_singular_values(x)
    w = np.asarray(weights, dtype=float)
    if w.shape != (sh.shape[0],):
        raise ValueError(
            "expected %d weights, got shape %s" % (sh.shape[0], w.shape)
        )
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    return float(w @ sh.sum(axis=1))


def gamma_norm(sigma, gamma):
    """Non-convex surrogate ``sum (1 + g) * s / (g + s)`` over singular values.

    Interpolates between rank (small ``gamma``) and the nuclear norm (large
    ``gamma``).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sigma = np.asarray(sigma, dtype=float)
    return float((((1.0 + gamma) * sigma) / (gamma + sigma)).sum())


def t_gamma_norm(x, gamma):
    """Mean over Fourier slices of :func:`gamma_norm` of the slice spectra."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sh = fourier_singular_values(x)
    return float((((1.0 + gamma) * sh) / (gamma + sh)).sum() / sh.shape[1])


def _gamma_penalty(sigma, rho, gamma):
    return rho * (1.0 + gamma) * sigma / (gamma + sigma)


def _gamma_shrink(sh, rho, gamma, max_iter, tol):
    """Shrink a spectrum toward the minimum of ``(s-w)^2/2 + rho*pen(w)``.

    Runs the fixed-point map ``w <- (s - rho*g*(1+g)/(g+w)^2)_+`` from
    ``w = s``; the map majorizes the concave penalty, so iterates descend
    and decrease monotonically to the largest stationary point.  Because the
    penalty is non-convex the origin can still win, so the stationary value
    is kept only if it beats shrinking to zero outright.
    """
    curvature = rho * gamma * (1.0 + gamma)
    w = sh.copy()
    step = np.inf
    for _ in range(max_iter):
        w_next = np.maximum(sh - curvature / (gamma + w) ** 2, 0.0)
        step = float(np.abs(w_next - w).max()) if w.size else 0.0
        w = w_next
        if step < tol:
            break
    else:
        logger.warning(
            "singular-value fixed point did not converge in %d iterations "
            "(last step %.3e)", max_iter, step,
        )
    at_w = 0.5 * (sh - w) ** 2 + _gamma_penalty(w, rho, gamma)
    at_zero = 0.5 * sh**2
    return np.where(at_w <= at_zero, w, 0.0)


def t_gamma_prox(f, rho, gamma, fp_max_iter=50, fp_tol=1e-10):
    """Minimize ``0.5 * ||f - t||_F^2 + rho * t_gamma_norm(t, gamma)``.

    Works per Fourier slice on the singular values of ``f`` (the coupling
    decouples there by Parseval, with the 1/n3 factors cancelling between
    the two terms).  Every output singular value is at most its input
    counterpart and the objective never exceeds its value at ``t = f``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if fp_max_iter < 1:
        raise ValueError("fp_max_iter must be at least 1")
    uh, sh, vh = _fourier_svd(f)
    omega = _gamma_shrink(sh, rho, gamma, fp_max_iter, fp_tol)
    return _assemble_from_fourier_svd(uh, omega, vh)


def weighted_tnn_prox(f, rho, weights=None):
    """Minimize ``0.5 * ||f - t||_F^2 + rho * weighted_tnn(t, weights)``.

    Soft-thresholds the singular values of every Fourier slice.  The
    threshold carries a factor ``n3`` because the Frobenius term picks up
    ``1/n3`` under Parseval while the nuclear-norm sum of
    :func:`weighted_tnn` does not.  The exact prox needs non-decreasing
    weights (so thresholded spectra stay sorted); the all-ones default is
    the plain tensor nuclear norm.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    f = np.asarray(f, dtype=float)
    n3 = f.shape[2]
    r = min(f.shape[0], f.shape[1])
    if weights is None:
        w = np.ones(r)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (r,):
            raise ValueError("expected %d weights, got shape %s" % (r, w.shape))
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
    uh, sh, vh = _fourier_svd(f)
    omega = np.maximum(sh - rho * n3 * w[:, None], 0.0)
    return _assemble_from_fourier_svd(uh, omega, vh)
