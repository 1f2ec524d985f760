"""Gaussian random field sampling with a squared-exponential covariance.

Draws are ``L @ z`` where ``L`` factors the covariance matrix at the sensor
points. Randomness: each sample ``i`` owns a PCG64 stream seeded by
``SeedSequence([seed, i])``; standard normals are produced by the inverse
normal CDF (``scipy.special.ndtri``) applied to uniforms on the open
interval (0, 1) built from 53 random bits. This makes sample ``i`` independent
of how many samples are drawn and of generation order.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg as sla
from scipy.special import ndtri

from .linalg import NumericalError

DEFAULT_JITTER = 1e-10
MAX_JITTER = 1e-6


def _as_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"points must be 1-D or 2-D, got shape {pts.shape}")
    return np.ascontiguousarray(pts)


@dataclass(frozen=True, eq=False)
class GrfConfig:
    """Squared-exponential GRF restricted to a set of sensor points.

    ``sensor_points`` is an (m,) array for 1-D fields or (m, 2) for 2-D.
    """

    length_scale: float
    sensor_points: np.ndarray
    jitter: float = DEFAULT_JITTER
    _points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError("length_scale must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")
        pts = _as_points(self.sensor_points)
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("sensor points must be pairwise distinct")
        object.__setattr__(self, "_points", pts)

    @property
    def points(self):
        return self._points

    @property
    def m(self):
        return len(self._points)

    @cached_property
    def factor(self):
        return factor_covariance(self)


def squared_exponential(x1, x2, length_scale):
    """Kernel matrix ``exp(-|x1_i - x2_j|^2 / (2 l^2))``."""
    x1 = _as_points(x1)
    x2 = _as_points(x2)
    d2 = np.zeros((len(x1), len(x2)))
    for k in range(x1.shape[1]):
        diff = x1[:, k][:, None] - x2[:, k][None, :]
        d2 += diff * diff
    return np.exp(-d2 / (2.0 * length_scale**2))


def covariance_matrix(cfg, jitter=None):
    """m x m covariance at the sensors, with ``cfg.jitter`` on the diagonal."""
    jitter = cfg.jitter if jitter is None else jitter
    k = squared_exponential(cfg.points, cfg.points, cfg.length_scale)
    k = 0.5 * (k + k.T)
    k[np.diag_indices_from(k)] = 1.0 + jitter
    return k


def factor_covariance(cfg):
    """Return ``L`` with ``L @ L.T`` approximating the covariance.

    Cholesky is tried with the configured jitter, escalating by a factor of
    ten up to ``MAX_JITTER``; if all attempts fail the symmetric
    eigendecomposition with negative eigenvalues clamped to zero is used.
    """
    base = covariance_matrix(cfg, jitter=0.0)
    jitter = cfg.jitter
    eye = np.eye(cfg.m)
    while True:
        try:
            return sla.cholesky(base + jitter * eye, lower=True, check_finite=False)
        except sla.LinAlgError:
            pass
        if jitter >= MAX_JITTER:
            break
        jitter = max(jitter * 10.0, DEFAULT_JITTER)
        jitter = min(jitter, MAX_JITTER)
    try:
        vals, vecs = sla.eigh(base + cfg.jitter * eye)
    except sla.LinAlgError as exc:
        raise NumericalError(f"covariance factorization failed: {exc}") from exc
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_stream(seed, index):
    """Generator dedicated to sample ``index`` of a draw seeded by ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def standard_normals(rng, size):
    bits = rng.integers(0, 2**53, size=size, dtype=np.int64)
    u = (bits.astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def sample(cfg, n_samples, seed, start=0):
    """Draw ``n_samples`` field realizations at the sensor points.

    Returns an ``(n_samples, m)`` array; row ``i`` is draw number
    ``start + i`` of the stream family identified by ``seed``.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    m = cfg.m
    if n_samples == 0:
        return np.zeros((0, m))
    z = np.empty((n_samples, m))
    for i in range(n_samples):
        z[i] = standard_normals(sample_stream(seed, start + i), m)
    return np.ascontiguousarray(z @ cfg.factor.T)
