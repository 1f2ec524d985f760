"""Benchmark operator-learning datasets and the numerical solvers behind them.

Layout convention: ``inputs`` is N x m (one input function per row, sampled
at the sensors) and ``labels`` is M x N (one output function per column,
sampled at the collocation points).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import grf
from .io import load_container, save_container
from .linalg import DimensionError, NumericalError

PROBLEMS = ("antiderivative", "nonlinear_ode", "darcy", "inverse_source")
KAPPA_TRANSFORMS = ("exp", "softplus", "none")
BLOWUP_LIMIT = 1e6


class DomainError(ValueError):
    """Raised for physically invalid solver inputs (e.g. non-positive permeability)."""


@dataclass(eq=False)
class OperatorDataset:
    inputs: np.ndarray
    labels: np.ndarray
    sensor_points: np.ndarray
    collocation_points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        self.sensor_points = _points2d(self.sensor_points)
        self.collocation_points = _points2d(self.collocation_points)
        if self.inputs.ndim != 2 or self.labels.ndim != 2:
            raise DimensionError("inputs and labels must be 2-D")
        if self.labels.shape[1] != self.inputs.shape[0]:
            raise DimensionError(
                f"labels have {self.labels.shape[1]} columns but there are {self.inputs.shape[0]} inputs")
        if self.inputs.shape[1] != len(self.sensor_points):
            raise DimensionError("input width must equal the number of sensor points")
        if self.labels.shape[0] != len(self.collocation_points):
            raise DimensionError("label rows must equal the number of collocation points")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.labels))):
            raise NumericalError("dataset contains non-finite values")

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def m(self):
        return self.inputs.shape[1]

    @property
    def big_m(self):
        return self.labels.shape[0]

    def subset(self, index):
        index = np.asarray(index)
        meta = dict(self.meta, n=int(len(index)))
        return OperatorDataset(self.inputs[index], self.labels[:, index],
                               self.sensor_points, self.collocation_points, meta)

    def split(self, n_train=None):
        """First ``n_train`` samples for training, the rest for testing (default: halves)."""
        if n_train is None:
            n_train = self.n // 2
        if not 0 < n_train < self.n:
            raise ValueError(f"n_train must lie in (0, {self.n})")
        idx = np.arange(self.n)
        return self.subset(idx[:n_train]), self.subset(idx[n_train:])

    def save(self, path):
        save_container(path, self.meta, {
            "inputs": self.inputs, "labels": self.labels,
            "sensor_points": self.sensor_points,
            "collocation_points": self.collocation_points})

    @classmethod
    def load(cls, path):
        meta, arrays = load_container(path)
        meta.pop("arrays", None)
        return cls(arrays["inputs"], arrays["labels"], arrays["sensor_points"],
                   arrays["collocation_points"], meta)


def _points2d(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return np.ascontiguousarray(pts)


def uniform_points(count):
    return np.linspace(0.0, 1.0, count)


def grid_points(n):
    """Flattened ``n x n`` uniform mesh of [0,1]^2, row-major with ``x`` slowest."""
    x = np.linspace(0.0, 1.0, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


# -- antiderivative ---------------------------------------------------------

def antiderivative_labels(u, sensors, points):
    """Integral from 0 of the piecewise-linear interpolant of each row of ``u``.

    At the sensors this is the cumulative trapezoid rule; between sensors the
    interpolant is integrated exactly. Returns an M x N array.
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    x = np.asarray(sensors, dtype=np.float64).ravel()
    y = np.asarray(points, dtype=np.float64).ravel()
    dx = np.diff(x)
    cum = np.zeros_like(u)
    cum[:, 1:] = np.cumsum(0.5 * dx * (u[:, 1:] + u[:, :-1]), axis=1)
    k = np.clip(np.searchsorted(x, y, side="right") - 1, 0, len(x) - 2)
    d = y - x[k]
    slope = (u[:, k + 1] - u[:, k]) / dx[k]
    s = cum[:, k] + u[:, k] * d + 0.5 * slope * d * d
    s[:, y == x[0]] = 0.0
    return np.ascontiguousarray(s.T)


def gen_antiderivative(n=2000, m=100, big_m=100, l=0.1, seed=0, jitter=grf.DEFAULT_JITTER):
    """Antiderivative operator ``u -> int_0^x u`` with GRF inputs on [0, 1]."""
    sensors = uniform_points(m)
    points = uniform_points(big_m)
    cfg = grf.GrfConfig(l, sensors, jitter)
    u = grf.sample(cfg, n, seed)
    labels = antiderivative_labels(u, sensors, points)
    meta = {"problem": "antiderivative", "n": n, "m": m, "big_m": big_m,
            "length_scale": l, "seed": seed, "jitter": jitter,
            "integration": "piecewise-linear exact (trapezoid at sensors)"}
    return OperatorDataset(u, labels, sensors, points, meta)


# -- nonlinear ODE ----------------------------------------------------------

def ode_rhs(s, u):
    return -0.1 * s * s + u


def ode_labels(u, sensors, points, refine=10, s0=0.0):
    """Solve ``s' = -0.1 s^2 + u`` with classical RK4, ``s(x_0) = s0``.

    The step is the sensor spacing divided by ``refine`` so every RK4 step
    stays inside one linear piece of the interpolated ``u``. The fine-grid
    solution is linearly interpolated to ``points`` (exact when they are
    fine-grid nodes). Returns an M x N array.
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    x = np.asarray(sensors, dtype=np.float64).ravel()
    y = np.asarray(points, dtype=np.float64).ravel()
    # fine grid including half steps: 2*refine sub-intervals per sensor interval
    frac = np.arange(2 * refine) / (2 * refine)
    half = np.concatenate([(x[:-1, None] + np.diff(x)[:, None] * frac[None, :]).ravel(), x[-1:]])
    u_half = np.empty((u.shape[0], len(half)))
    for i, row in enumerate(u):
        u_half[i] = np.interp(half, x, row)
    nodes = half[::2]
    s = np.empty((len(nodes), u.shape[0]))
    s[0] = s0
    cur = np.full(u.shape[0], float(s0))
    for j in range(len(nodes) - 1):
        h = nodes[j + 1] - nodes[j]
        ua, ub, uc = u_half[:, 2 * j], u_half[:, 2 * j + 1], u_half[:, 2 * j + 2]
        k1 = ode_rhs(cur, ua)
        k2 = ode_rhs(cur + 0.5 * h * k1, ub)
        k3 = ode_rhs(cur + 0.5 * h * k2, ub)
        k4 = ode_rhs(cur + h * k3, uc)
        cur = cur + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s[j + 1] = cur
    if not np.all(np.isfinite(s)):
        raise NumericalError("ODE integration diverged")
    out = np.empty((len(y), u.shape[0]))
    for i in range(u.shape[0]):
        out[:, i] = np.interp(y, nodes, s[:, i])
    return out


def gen_nonlinear_ode(n=2000, m=100, big_m=100, l=0.1, seed=0, refine=10,
                      jitter=grf.DEFAULT_JITTER):
    """Solution operator of ``s' = -0.1 s^2 + u``, ``s(0) = 0``, GRF sources."""
    sensors = uniform_points(m)
    points = uniform_points(big_m)
    cfg = grf.GrfConfig(l, sensors, jitter)
    u = grf.sample(cfg, n, seed)
    labels = ode_labels(u, sensors, points, refine)
    meta = {"problem": "nonlinear_ode", "n": n, "m": m, "big_m": big_m,
            "length_scale": l, "seed": seed, "jitter": jitter,
            "integrator": "rk4", "refine": refine, "initial_condition": 0.0}
    return OperatorDataset(u, labels, sensors, points, meta)


# -- Darcy flow -------------------------------------------------------------

def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def darcy_operator_banded(kappa_grid):
    """Upper banded storage of ``-A`` for the interior unknowns.

    ``A`` is the 5-point finite-volume discretization of ``div(kappa grad u)``
    on the node grid, with harmonic-mean face permeabilities and zero
    Dirichlet data. Unknown ``(i, j)`` (1-based interior) has index
    ``(i-1)*(n-2) + (j-1)``.
    """
    kap = np.asarray(kappa_grid, dtype=np.float64)
    n = kap.shape[0]
    if kap.ndim != 2 or kap.shape != (n, n) or n < 3:
        raise DimensionError("kappa_grid must be a square grid of size >= 3")
    if not np.all(kap > 0):
        raise DomainError("permeability must be strictly positive")
    h2 = (1.0 / (n - 1)) ** 2
    ni = n - 2
    kx = _harmonic(kap[1:, :], kap[:-1, :]) / h2  # face between i and i+1, (n-1, n)
    ky = _harmonic(kap[:, 1:], kap[:, :-1]) / h2  # face between j and j+1, (n, n-1)
    west = kx[:-1, 1:-1]   # face (i-1, i) for interior i
    east = kx[1:, 1:-1]
    south = ky[1:-1, :-1]
    north = ky[1:-1, 1:]
    diag = (west + east + south + north).ravel()
    ab = np.zeros((ni + 1, ni * ni))
    ab[ni] = diag
    # j-neighbour: coupling between p-1 and p within the same i-row
    sup1 = -south.copy()
    sup1[:, 0] = 0.0
    ab[ni - 1] = sup1.ravel()
    # i-neighbour: coupling between p-ni and p
    supn = -west.copy()
    supn[0, :] = 0.0
    ab[0] = supn.ravel()
    return ab


def solve_darcy(kappa_grid, f_value=1.0):
    """Solve ``div(kappa grad u) = f`` with ``u = 0`` on the boundary of [0,1]^2.

    ``kappa_grid[i, j]`` is the permeability at node ``(x_i, y_j)`` of a
    uniform ``n x n`` node mesh. Returns ``u`` on the same mesh. The
    symmetric positive definite system ``-A u = -f`` is solved by banded
    Cholesky.
    """
    kap = np.asarray(kappa_grid, dtype=np.float64)
    ab = darcy_operator_banded(kap)
    n = kap.shape[0]
    ni = n - 2
    rhs = np.full(ni * ni, -float(f_value))
    try:
        sol = sla.solveh_banded(ab, rhs, lower=False, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalError(f"Darcy solve failed: {exc}") from exc
    u = np.zeros((n, n))
    u[1:-1, 1:-1] = sol.reshape(ni, ni)
    return u


def transform_kappa(g, name):
    if name == "exp":
        return np.exp(g)
    if name == "softplus":
        return np.logaddexp(0.0, g)
    if name == "none":
        return np.array(g, dtype=np.float64)
    raise ValueError(f"unknown kappa transform {name!r}; choose from {KAPPA_TRANSFORMS}")


def gen_darcy(n=2000, l=0.1, seed=0, kappa_transform="exp", grid=50, f_value=1.0,
              jitter=grf.DEFAULT_JITTER):
    """Darcy flow ``kappa -> u`` on a ``grid x grid`` mesh, kappa = transform(GRF)."""
    points = grid_points(grid)
    cfg = grf.GrfConfig(l, points, jitter)
    g = grf.sample(cfg, n, seed)
    kappa = transform_kappa(g, kappa_transform)
    labels = np.empty((grid * grid, n))
    for i in range(n):
        labels[:, i] = solve_darcy(kappa[i].reshape(grid, grid), f_value).ravel()
    meta = {"problem": "darcy", "n": n, "m": grid * grid, "big_m": grid * grid,
            "grid": grid, "length_scale": l, "seed": seed, "jitter": jitter,
            "kappa_transform": kappa_transform, "f_value": f_value,
            "discretization": "5-point finite volume, harmonic face permeability"}
    return OperatorDataset(kappa, labels, points, points, meta)


# -- reaction-diffusion inverse source --------------------------------------

def _heat_banded(nx, dt, d):
    h2 = (1.0 / (nx - 1)) ** 2
    ni = nx - 2
    r = dt * d / h2
    ab = np.zeros((3, ni))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r
    return ab


def solve_reaction_diffusion(s, d, k, u0, nt, nx, final_only=False):
    """Integrate ``u_t = d u_xx + k u^2 + s(x)`` on [0,1] x [0,1], ``u = 0`` at x = 0, 1.

    Semi-implicit Euler: diffusion implicit, reaction and source explicit.
    ``s`` and ``u0`` are given on ``nx`` uniform nodes; either may be a 2-D
    array of shape (batch, nx) to solve many problems at once.

    Returns the (nt+1, nx) space-time solution, or with ``final_only`` the
    solution at t = 1 (shape (nx,) or (batch, nx)).
    """
    s = np.asarray(s, dtype=np.float64)
    u0 = np.asarray(u0, dtype=np.float64)
    batched = s.ndim == 2 or u0.ndim == 2
    s2 = np.atleast_2d(s)
    u = np.array(np.broadcast_to(np.atleast_2d(u0), np.broadcast_shapes(s2.shape, np.atleast_2d(u0).shape)))
    if u.shape[1] != nx or s2.shape[1] != nx:
        raise DimensionError(f"s and u0 must have {nx} spatial nodes")
    if nt <= 0 or nx < 3:
        raise DimensionError("need nt >= 1 and nx >= 3")
    dt = 1.0 / nt
    ab = _heat_banded(nx, dt, d)
    u[:, 0] = 0.0
    u[:, -1] = 0.0
    src = np.broadcast_to(s2, u.shape)[:, 1:-1].T
    inner = np.ascontiguousarray(u[:, 1:-1].T)
    history = None if final_only else [u.copy()]
    for _ in range(nt):
        rhs = inner + dt * (k * inner * inner + src)
        inner = sla.solve_banded((1, 1), ab, rhs, check_finite=False)
        if not np.all(np.abs(inner) <= BLOWUP_LIMIT):
            raise NumericalError("reaction-diffusion solution blew up; reduce the time step")
        if history is not None:
            frame = np.zeros_like(u)
            frame[:, 1:-1] = inner.T
            history.append(frame)
    if history is not None:
        out = np.stack(history, axis=1)  # (batch, nt+1, nx)
        return out if batched else out[0]
    final = np.zeros_like(u)
    final[:, 1:-1] = inner.T
    return final if batched else final[0]


def gen_inverse_source(n=2000, l=0.1, d=0.01, k=0.01, seed=0, m=100, big_m=100,
                       nx=100, nt=1000, jitter=grf.DEFAULT_JITTER):
    """Inverse source problem: final-time observation ``u(1, .)`` -> source ``s``.

    Sources are GRF draws on the ``nx``-node solver grid with ``u(0, .) = 0``.
    Inputs are the observations at ``m`` uniform sensors, labels are the
    sources at ``big_m`` uniform collocation points (linear interpolation
    when the grids differ).
    """
    grid = uniform_points(nx)
    sensors = uniform_points(m)
    points = uniform_points(big_m)
    cfg = grf.GrfConfig(l, grid, jitter)
    src = grf.sample(cfg, n, seed)
    obs = solve_reaction_diffusion(src, d, k, np.zeros(nx), nt, nx, final_only=True)
    obs = np.atleast_2d(obs)
    if m != nx:
        obs = np.vstack([np.interp(sensors, grid, row) for row in obs]) if n else np.zeros((0, m))
    labels = src.T if big_m == nx else np.column_stack([np.interp(points, grid, row) for row in src])
    meta = {"problem": "inverse_source", "n": n, "m": m, "big_m": big_m, "nx": nx, "nt": nt,
            "length_scale": l, "seed": seed, "jitter": jitter, "D": d, "k": k,
            "u0": "zero", "observation": "final_time_slice",
            "note": "observation operator is u(t=1, x) at the sensors; the spatial-boundary "
                    "trace is identically zero under the Dirichlet condition"}
    return OperatorDataset(obs, np.ascontiguousarray(labels).reshape(big_m, n), sensors, points, meta)
