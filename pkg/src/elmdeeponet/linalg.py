"""Dense linear algebra kernel: pseudoinverse, bilinear least squares, metrics.

Matrices are plain ``numpy.ndarray`` objects in float64, C (row-major) order.
"""

import numpy as np

DEFAULT_REL_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when matrix shapes are empty or inconsistent."""


class NumericalError(ArithmeticError):
    """Raised when a factorization fails or produces non-finite values."""


class DegenerateSampleError(ValueError):
    """Raised when a relative error is requested against an all-zero sample."""


def as_matrix(a, name="matrix"):
    """Return ``a`` as a 2-D C-ordered float64 array."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _svd(a):
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def pseudoinverse(a, rel_tol=DEFAULT_REL_TOL, ridge=0.0, return_rank=False):
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``rel_tol * sigma_max`` are treated as zero.
    With ``ridge > 0`` the reciprocal ``1/s`` is replaced by the Tikhonov
    filter ``s / (s**2 + ridge)``.

    Parameters
    ----------
    a : array_like, shape (r, c)
    rel_tol : float
        Relative singular value cutoff, must be positive.
    ridge : float
        Non-negative Tikhonov parameter (0 gives the plain pseudoinverse).
    return_rank : bool
        Also return the number of singular values kept.

    Returns
    -------
    ndarray, shape (c, r)
    """
    a = as_matrix(a)
    if a.size == 0:
        raise DimensionError("pseudoinverse of an empty matrix")
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    u, s, vt = _svd(a)
    inv = np.zeros_like(s)
    keep = s > rel_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    if ridge > 0:
        inv[keep] = s[keep] / (s[keep] ** 2 + ridge)
    else:
        inv[keep] = 1.0 / s[keep]
    out = (vt.T * inv) @ u.T
    if not np.all(np.isfinite(out)):
        raise NumericalError("pseudoinverse produced non-finite entries")
    out = np.ascontiguousarray(out)
    if return_rank:
        return out, int(np.count_nonzero(keep))
    return out


def effective_rank(a, rel_tol=DEFAULT_REL_TOL):
    """Number of singular values above ``rel_tol * sigma_max``."""
    a = as_matrix(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def fit_bilinear(t, b, g, rel_tol=DEFAULT_REL_TOL, ridge=0.0, return_ranks=False):
    """Solve ``min_W ||T W B - G||_F`` as ``W = pinv(T) @ G @ pinv(B)``.

    ``t`` is M x p2, ``b`` is p1 x N and ``g`` is M x N; the result is
    p2 x p1. The two pseudoinverses are formed separately, so the cost is
    dominated by the SVDs of ``t`` and ``b`` rather than a Kronecker system.
    With ``return_ranks`` the effective ranks of ``t`` and ``b`` are returned too.
    """
    t = as_matrix(t, "T")
    b = as_matrix(b, "B")
    g = as_matrix(g, "G")
    m, _ = t.shape
    _, n = b.shape
    if g.shape != (m, n):
        raise DimensionError(
            f"G has shape {g.shape}, expected {(m, n)} from T {t.shape} and B {b.shape}")
    t_pinv, rank_t = pseudoinverse(t, rel_tol, ridge, return_rank=True)
    b_pinv, rank_b = pseudoinverse(b, rel_tol, ridge, return_rank=True)
    # associate so the smaller intermediate is formed first
    if t_pinv.shape[0] * n <= m * b_pinv.shape[1]:
        w = (t_pinv @ g) @ b_pinv
    else:
        w = t_pinv @ (g @ b_pinv)
    w = np.ascontiguousarray(w)
    if return_ranks:
        return w, rank_t, rank_b
    return w


def frobenius_norm(a):
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def per_sample_relative_errors(pred, truth):
    """Relative L2 error of each column (sample) of ``pred`` against ``truth``."""
    pred = as_matrix(pred, "pred")
    truth = as_matrix(truth, "truth")
    if pred.shape != truth.shape:
        raise DimensionError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    denom = np.linalg.norm(truth, axis=0)
    if np.any(denom == 0):
        bad = np.flatnonzero(denom == 0)
        raise DegenerateSampleError(f"truth columns {bad.tolist()} are identically zero")
    return np.linalg.norm(pred - truth, axis=0) / denom


def relative_l2_error(pred, truth):
    """Mean over columns of ``||pred_i - truth_i|| / ||truth_i||``, as a fraction."""
    return float(np.mean(per_sample_relative_errors(pred, truth)))
