"""Frozen random feature maps (branch/trunk networks) and fixed sinusoidal bases.

Nothing here is ever trained: parameters are drawn once from a seeded
generator and the arrays are marked read-only.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .linalg import DimensionError

INIT_SCHEMES = ("kaiming_uniform", "xavier_uniform", "kaiming_normal", "torch_default")


def _generator(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def relu(x):
    return np.maximum(x, 0.0)


def _draw_layer(rng, fan_in, fan_out, scheme):
    if scheme == "kaiming_uniform":
        bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    elif scheme == "xavier_uniform":
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    elif scheme == "torch_default":
        bound = np.sqrt(1.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    elif scheme == "kaiming_normal":
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
    else:
        raise ValueError(f"unknown init scheme {scheme!r}; choose from {INIT_SCHEMES}")
    bias_bound = np.sqrt(1.0 / fan_in)
    b = rng.uniform(-bias_bound, bias_bound, size=fan_out)
    return w, b


@dataclass(frozen=True, eq=False)
class FixedMlp:
    """Fully connected network with frozen random weights.

    ``weights[i]`` has shape ``(layer_dims[i], layer_dims[i+1])``. ReLU is
    applied after every layer but the last, and after the last one too when
    ``final_activation`` is set (the ELM hidden-layer convention).
    """

    layer_dims: tuple
    weights: tuple
    biases: tuple
    final_activation: bool = False
    scheme: str = "kaiming_uniform"
    seed: int = 0

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DimensionError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[i], self.layer_dims[i + 1]) or b.shape != (self.layer_dims[i + 1],):
                raise DimensionError(f"layer {i} parameter shapes do not match layer_dims")

    kind = "mlp"

    @property
    def in_dim(self):
        return self.layer_dims[0]

    @property
    def out_dim(self):
        return self.layer_dims[-1]

    @property
    def n_layers(self):
        return len(self.weights)

    def layer(self, i, x):
        """Apply layer ``i`` (affine map plus its activation) to a batch."""
        h = x @ self.weights[i] + self.biases[i]
        if i < self.n_layers - 1 or self.final_activation:
            h = relu(h)
        return h

    def forward(self, inputs):
        x = _batch(inputs, self.in_dim)
        for i in range(self.n_layers):
            x = self.layer(i, x)
        return np.ascontiguousarray(x)

    __call__ = forward

    def arrays(self):
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def meta(self):
        return {"kind": self.kind, "layer_dims": list(self.layer_dims),
                "final_activation": self.final_activation,
                "scheme": self.scheme, "seed": self.seed}


def _batch(inputs, width):
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None] if width == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise DimensionError(f"expected inputs of width {width}, got shape {x.shape}")
    return x


def init_mlp(layer_dims, seed, scheme="kaiming_uniform", final_activation=False):
    """Draw a frozen MLP.

    Weights follow ``scheme`` (default: uniform in +-sqrt(6/fan_in)); biases
    are uniform in +-sqrt(1/fan_in). Deterministic in ``seed``.
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise DimensionError(f"need at least two positive layer dims, got {layer_dims}")
    rng = _generator(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w, b = _draw_layer(rng, fan_in, fan_out, scheme)
        weights.append(_freeze(w))
        biases.append(_freeze(b))
    return FixedMlp(dims, tuple(weights), tuple(biases), bool(final_activation), scheme, int(seed))


def init_slfn(in_dim, width, seed, scheme="kaiming_uniform"):
    """Single hidden layer ELM: features are ``relu(x @ W1 + b1)`` of size ``width``."""
    return init_mlp((in_dim, width), seed, scheme, final_activation=True)


def init_trunk_mlp(point_dim, p2, seed, n_layers=3, scheme="kaiming_uniform", final_activation=False):
    """Trunk network: ``n_layers`` dense layers of ``p2`` units each."""
    return init_mlp((point_dim,) + (p2,) * n_layers, seed, scheme, final_activation)


def _conv2d(x, kernel, bias, stride):
    """Batched 'same'-padded 2-D convolution. x: (n, c_in, h, w); kernel: (c_out, c_in, k, k)."""
    k = kernel.shape[-1]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.einsum("nchwij,ocij->nohw", win, kernel, optimize=True)
    return out + bias[None, :, None, None]


@dataclass(frozen=True, eq=False)
class FixedConvNet:
    """Frozen CNN: strided 'same' convolutions with ReLU, then a FixedMlp head.

    ``conv_weights[i]`` has shape ``(c_out, c_in, k, k)``.
    """

    grid: int
    channels: tuple
    kernel_size: int
    stride: int
    conv_weights: tuple
    conv_biases: tuple
    head: FixedMlp
    scheme: str = "kaiming_uniform"
    seed: int = 0

    kind = "conv"

    @property
    def in_dim(self):
        return self.grid * self.grid

    @property
    def out_dim(self):
        return self.head.out_dim

    def conv_features(self, inputs):
        x = _batch(inputs, self.in_dim).reshape(-1, 1, self.grid, self.grid)
        for w, b in zip(self.conv_weights, self.conv_biases):
            x = relu(_conv2d(x, w, b, self.stride))
        return x.reshape(len(x), -1)

    def forward(self, inputs):
        return self.head.forward(self.conv_features(inputs))

    __call__ = forward

    def arrays(self):
        out = {}
        for i, (w, b) in enumerate(zip(self.conv_weights, self.conv_biases)):
            out[f"conv_w{i}"] = w.reshape(w.shape[0], -1)
            out[f"conv_b{i}"] = b
        out.update({f"head_{k}": v for k, v in self.head.arrays().items()})
        return out

    def meta(self):
        return {"kind": self.kind, "grid": self.grid, "channels": list(self.channels),
                "kernel_size": self.kernel_size, "stride": self.stride,
                "scheme": self.scheme, "seed": self.seed, "head": self.head.meta()}


def _conv_out(size, kernel_size, stride):
    return (size + 2 * (kernel_size // 2) - kernel_size) // stride + 1


def init_convnet(grid, out_dim, seed, channels=(1, 8, 16, 32), kernel_size=3, stride=2,
                 fc_width=256, scheme="kaiming_uniform", final_activation=True):
    """Frozen CNN branch for inputs sampled on a ``grid x grid`` mesh."""
    if grid <= 0 or out_dim <= 0 or len(channels) < 2 or channels[0] != 1:
        raise DimensionError("invalid conv net dimensions")
    rng = _generator(seed)
    ws, bs = [], []
    size = grid
    for c_in, c_out in zip(channels[:-1], channels[1:]):
        fan_in = c_in * kernel_size * kernel_size
        w, b = _draw_layer(rng, fan_in, c_out, scheme)
        # (fan_in, c_out) -> (c_out, c_in, k, k)
        ws.append(_freeze(w.T.reshape(c_out, c_in, kernel_size, kernel_size)))
        bs.append(_freeze(b))
        size = _conv_out(size, kernel_size, stride)
    flat = channels[-1] * size * size
    head_seed = int(rng.integers(0, 2**63 - 1))
    head = init_mlp((flat, fc_width, out_dim), head_seed, scheme, final_activation)
    return FixedConvNet(int(grid), tuple(int(c) for c in channels), int(kernel_size), int(stride),
                        tuple(ws), tuple(bs), head, scheme, int(seed))


@dataclass(frozen=True)
class SinusoidalBasis:
    """Fixed sinusoidal functions used in place of a trunk network.

    1-D (``p2`` even): ``sin(16 k pi y / p2)`` for ``k = 1..p2/2``, followed by
    the matching cosines.

    2-D: the four families ``sin(n pi x) sin(n pi y)``,
    ``sin(n pi x) cos(n pi y + pi/2)``, ``cos(n pi x + pi/2) sin(n pi y)``,
    ``cos(n pi x + pi/2) cos(n pi y + pi/2)``. The first ``p2`` functions of
    the sequence n=1 (families 0..3), n=2 (families 0..3), ... are kept and
    the columns are ordered by family, then by ``n``. Note that
    ``cos(t + pi/2) = -sin(t)``, so every family equals ``+-sin(n pi x) sin(n pi y)``
    and the 2-D basis has only ``ceil(p2/4)`` linearly independent columns.
    """

    dimension: int
    p2: int

    kind = "sinusoidal"

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DimensionError("sinusoidal basis dimension must be 1 or 2")
        if self.p2 <= 0:
            raise DimensionError("p2 must be positive")
        if self.dimension == 1 and self.p2 % 2:
            raise DimensionError("1-D sinusoidal basis needs an even p2")

    @property
    def in_dim(self):
        return self.dimension

    @property
    def out_dim(self):
        return self.p2

    def frequencies(self):
        """Angular frequencies of the 1-D sine block (cosines reuse them)."""
        k = np.arange(1, self.p2 // 2 + 1)
        return 32.0 * k * np.pi / (2.0 * self.p2)

    def terms(self):
        """(family, n) pairs of the 2-D basis in column order."""
        seq = [(i % 4, i // 4 + 1) for i in range(self.p2)]
        return sorted(seq)

    def forward(self, points):
        pts = _batch(points, self.dimension)
        if self.dimension == 1:
            arg = pts[:, :1] * self.frequencies()[None, :]
            return np.ascontiguousarray(np.hstack([np.sin(arg), np.cos(arg)]))
        x, y = pts[:, 0:1], pts[:, 1:2]
        fam, n = np.array(self.terms()).T
        ax = n[None, :] * np.pi * x
        ay = n[None, :] * np.pi * y
        half = np.pi / 2
        fx = np.where(fam[None, :] < 2, np.sin(ax), np.cos(ax + half))
        fy = np.where(fam[None, :] % 2 == 0, np.sin(ay), np.cos(ay + half))
        return np.ascontiguousarray(fx * fy)

    __call__ = forward

    def arrays(self):
        return {}

    def meta(self):
        return {"kind": self.kind, "dimension": self.dimension, "p2": self.p2,
                "ordering_2d": "first p2 of n-major cycle over families; columns family-major"}


def evaluate_basis(basis, points):
    return basis.forward(points)


def forward(feature_map, inputs):
    return feature_map.forward(inputs)


def digest(feature_map):
    """SHA-256 over the meta block and every parameter array."""
    h = hashlib.sha256(repr(sorted(feature_map.meta().items())).encode())
    for name, arr in sorted(feature_map.arrays().items()):
        h.update(name.encode())
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


def n_parameters(feature_map):
    return int(sum(np.asarray(a).size for a in feature_map.arrays().values()))


def to_container(feature_map):
    """(meta, arrays) suitable for ``io.write_container``."""
    return feature_map.meta(), {k: np.atleast_2d(v) for k, v in feature_map.arrays().items()}


def from_container(meta, arrays):
    """Rebuild a feature map saved with ``to_container``."""
    kind = meta["kind"]
    if kind == "sinusoidal":
        return SinusoidalBasis(meta["dimension"], meta["p2"])
    if kind == "mlp":
        return _mlp_from(meta, arrays)
    if kind == "conv":
        head = _mlp_from(meta["head"], {k[5:]: v for k, v in arrays.items() if k.startswith("head_")})
        channels = tuple(meta["channels"])
        k = meta["kernel_size"]
        ws, bs = [], []
        for i, (c_in, c_out) in enumerate(zip(channels[:-1], channels[1:])):
            ws.append(_freeze(arrays[f"conv_w{i}"].reshape(c_out, c_in, k, k)))
            bs.append(_freeze(arrays[f"conv_b{i}"].ravel()))
        return FixedConvNet(meta["grid"], channels, k, meta["stride"], tuple(ws), tuple(bs),
                            head, meta["scheme"], meta["seed"])
    raise ValueError(f"unknown feature map kind {kind!r}")


def _mlp_from(meta, arrays):
    dims = tuple(meta["layer_dims"])
    n = len(dims) - 1
    ws = tuple(_freeze(arrays[f"w{i}"]) for i in range(n))
    bs = tuple(_freeze(arrays[f"b{i}"].ravel()) for i in range(n))
    return FixedMlp(dims, ws, bs, meta["final_activation"], meta["scheme"], meta["seed"])
