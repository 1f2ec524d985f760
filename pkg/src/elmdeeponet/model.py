"""ELM-DeepONet: frozen branch and trunk features, closed-form output matrix.

The prediction for input ``u`` at point ``y`` is ``t(y) @ W @ b(u)`` with
``t`` the trunk features (length p2), ``b`` the branch features (length p1)
and ``W`` (p2 x p1) the only fitted parameter:

    W = pinv(T) @ G @ pinv(B),   T = t(collocation) (M x p2),
                                 B = b(inputs).T   (p1 x N).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import features as feat
from .io import load_container, save_container
from .linalg import (DEFAULT_REL_TOL, DimensionError, fit_bilinear,
                     frobenius_norm, per_sample_relative_errors)


class NotFittedError(RuntimeError):
    pass


def build_branch(spec, in_dim, p1, seed):
    """Branch feature map from a spec dict.

    ``{"kind": "slfn"}``: single ReLU hidden layer of width p1.
    ``{"kind": "mlp", "hidden": [..]}``: hidden layers then p1 ReLU features.
    ``{"kind": "conv", "grid": 50, ...}``: frozen CNN with p1 outputs.
    """
    kind = spec.get("kind", "slfn")
    scheme = spec.get("init", "kaiming_uniform")
    if kind == "slfn":
        return feat.init_slfn(in_dim, p1, seed, scheme)
    if kind == "mlp":
        dims = (in_dim, *spec.get("hidden", ()), p1)
        return feat.init_mlp(dims, seed, scheme, spec.get("final_activation", True))
    if kind == "conv":
        grid = int(spec.get("grid", round(np.sqrt(in_dim))))
        if grid * grid != in_dim:
            raise DimensionError(f"conv branch needs a square input, got width {in_dim}")
        return feat.init_convnet(grid, p1, seed, tuple(spec.get("channels", (1, 8, 16, 32))),
                                 spec.get("kernel_size", 3), spec.get("stride", 2),
                                 spec.get("fc_width", 256), scheme,
                                 spec.get("final_activation", True))
    raise ValueError(f"unknown branch kind {kind!r}")


def build_trunk(spec, point_dim, p2, seed):
    """Trunk feature map: ``{"kind": "mlp", "layers": 3}`` or ``{"kind": "sinusoidal"}``."""
    kind = spec.get("kind", "mlp")
    if kind == "mlp":
        return feat.init_trunk_mlp(point_dim, p2, seed, spec.get("layers", 3),
                                   spec.get("init", "kaiming_uniform"),
                                   spec.get("final_activation", False))
    if kind == "sinusoidal":
        return feat.SinusoidalBasis(point_dim, p2)
    raise ValueError(f"unknown trunk kind {kind!r}")


def _sub_seeds(seed):
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, np.uint64)[0] >> np.uint64(1)) for c in ss.spawn(2)]


@dataclass
class FitReport:
    residual: float
    relative_residual: float
    seconds: float
    rank_t: int
    rank_b: int
    p1: int
    p2: int
    n_train: int
    big_m: int
    rel_tol: float
    ridge: float

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class EvalReport:
    relative_error: float
    per_sample: np.ndarray = field(repr=False)

    def as_dict(self):
        return {"relative_error": self.relative_error, "n_samples": int(len(self.per_sample))}


class ElmDeepONet:
    """DeepONet whose branch and trunk are frozen; only ``w`` is learned."""

    def __init__(self, branch, trunk, p1, p2, branch_spec=None, trunk_spec=None, seed=None,
                 rel_tol=DEFAULT_REL_TOL, ridge=0.0):
        if branch.out_dim != p1 or trunk.out_dim != p2:
            raise DimensionError("feature map output sizes do not match p1/p2")
        self.branch = branch
        self.trunk = trunk
        self.p1 = int(p1)
        self.p2 = int(p2)
        self.branch_spec = dict(branch_spec or {})
        self.trunk_spec = dict(trunk_spec or {})
        self.seed = seed
        self.rel_tol = rel_tol
        self.ridge = ridge
        self.w = np.zeros((self.p2, self.p1))
        self.fitted = False

    @property
    def n_trainable(self):
        return self.p1 * self.p2

    def branch_matrix(self, inputs):
        """B in the p1 x N layout (features computed input-major, then transposed)."""
        return np.ascontiguousarray(self.branch.forward(inputs).T)

    def trunk_matrix(self, points):
        return self.trunk.forward(points)

    def fit(self, ds, rel_tol=None, ridge=None):
        rel_tol = self.rel_tol if rel_tol is None else rel_tol
        ridge = self.ridge if ridge is None else ridge
        self._check(ds.inputs, ds.collocation_points)
        start = time.perf_counter()
        t = self.trunk_matrix(ds.collocation_points)
        b = self.branch_matrix(ds.inputs)
        w, rank_t, rank_b = fit_bilinear(t, b, ds.labels, rel_tol, ridge, return_ranks=True)
        seconds = time.perf_counter() - start
        self.w = w
        self.fitted = True
        self.rel_tol, self.ridge = rel_tol, ridge
        resid = frobenius_norm(t @ w @ b - ds.labels)
        return FitReport(resid, resid / max(frobenius_norm(ds.labels), np.finfo(float).tiny),
                         seconds, rank_t, rank_b,
                         self.p1, self.p2, ds.n, ds.big_m, rel_tol, ridge)

    def predict(self, inputs, points):
        """M' x N' predictions ``T' @ w @ B'`` for query points and input functions."""
        if not self.fitted:
            raise NotFittedError("fit the model before predicting")
        self._check(inputs, points)
        t = self.trunk_matrix(points)
        b = self.branch_matrix(inputs)
        if t.shape[0] * self.p1 <= self.p2 * b.shape[1]:
            return (t @ self.w) @ b
        return t @ (self.w @ b)

    def evaluate(self, ds):
        pred = self.predict(ds.inputs, ds.collocation_points)
        errs = per_sample_relative_errors(pred, ds.labels)
        return EvalReport(float(np.mean(errs)), errs)

    def _check(self, inputs, points):
        inputs = np.asarray(inputs)
        points = np.asarray(points)
        if inputs.ndim != 2 or inputs.shape[1] != self.branch.in_dim:
            raise DimensionError(f"branch expects width {self.branch.in_dim}, got {inputs.shape}")
        pdim = 1 if points.ndim == 1 else points.shape[1]
        if pdim != self.trunk.in_dim:
            raise DimensionError(f"trunk expects points of dimension {self.trunk.in_dim}")

    def digests(self):
        return feat.digest(self.branch), feat.digest(self.trunk)

    def save(self, path):
        bmeta, barr = feat.to_container(self.branch)
        tmeta, tarr = feat.to_container(self.trunk)
        meta = {"p1": self.p1, "p2": self.p2, "seed": self.seed, "rel_tol": self.rel_tol,
                "ridge": self.ridge, "fitted": self.fitted,
                "branch_spec": self.branch_spec, "trunk_spec": self.trunk_spec,
                "branch": bmeta, "trunk": tmeta,
                "branch_arrays": sorted(barr), "trunk_arrays": sorted(tarr)}
        arrays = {"w": self.w}
        arrays.update({f"branch.{k}": v for k, v in barr.items()})
        arrays.update({f"trunk.{k}": v for k, v in tarr.items()})
        save_container(path, meta, arrays)

    @classmethod
    def load(cls, path):
        meta, arrays = load_container(path)
        branch = feat.from_container(meta["branch"], {k: arrays[f"branch.{k}"] for k in meta["branch_arrays"]})
        trunk = feat.from_container(meta["trunk"], {k: arrays[f"trunk.{k}"] for k in meta["trunk_arrays"]})
        model = cls(branch, trunk, meta["p1"], meta["p2"], meta["branch_spec"], meta["trunk_spec"],
                    meta["seed"], meta["rel_tol"], meta["ridge"])
        model.w = np.ascontiguousarray(arrays["w"])
        model.fitted = meta["fitted"]
        return model


def assemble(branch_spec, trunk_spec, p1, p2, seed, in_dim, point_dim, rel_tol=DEFAULT_REL_TOL, ridge=0.0):
    """Construct an unfitted model; branch and trunk use independent sub-seeds of ``seed``."""
    if p1 <= 0 or p2 <= 0:
        raise DimensionError("p1 and p2 must be positive")
    branch_seed, trunk_seed = _sub_seeds(seed)
    branch = build_branch(branch_spec, in_dim, p1, branch_seed)
    trunk = build_trunk(trunk_spec, point_dim, p2, trunk_seed)
    return ElmDeepONet(branch, trunk, p1, p2, branch_spec, trunk_spec, seed, rel_tol, ridge)


def gradient_descent_fit(t, b, g, epochs=100, lr=None):
    """Plain full-batch gradient descent on ``||T W B - G||_F^2`` from ``W = 0``.

    Used only as a timing reference. The default step is ``1/L`` with ``L``
    the Lipschitz constant ``2 ||T||_2^2 ||B||_2^2`` of the gradient.
    """
    if lr is None:
        lt = np.linalg.norm(t, 2)
        lb = np.linalg.norm(b, 2)
        lr = 1.0 / (2.0 * lt * lt * lb * lb)
    w = np.zeros((t.shape[1], b.shape[0]))
    tt = t.T
    bt = b.T
    for _ in range(epochs):
        r = t @ w @ b - g
        w -= lr * 2.0 * (tt @ r @ bt)
    return w
