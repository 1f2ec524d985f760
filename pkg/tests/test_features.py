import numpy as np
import pytest

from elmdeeponet import features as F
from elmdeeponet import io as eio
from elmdeeponet.linalg import DimensionError


def test_init_range_and_shape():
    net = F.init_mlp((1, 4), seed=5)
    assert net.weights[0].shape == (1, 4)
    assert np.all(np.abs(net.weights[0]) <= np.sqrt(6.0))
    assert np.all(np.abs(net.biases[0]) <= 1.0)


def test_init_deterministic_and_seed_sensitive():
    a = F.init_mlp((3, 8, 2), seed=1)
    b = F.init_mlp((3, 8, 2), seed=1)
    c = F.init_mlp((3, 8, 2), seed=2)
    assert F.digest(a) == F.digest(b)
    assert any(not np.array_equal(x, y) for x, y in zip(a.weights, c.weights))


@pytest.mark.parametrize("dims", [(3,), (3, 0, 2), ()])
def test_init_rejects_bad_dims(dims):
    with pytest.raises(DimensionError):
        F.init_mlp(dims, seed=0)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        F.init_mlp((2, 2), 0, scheme="orthogonal")


@pytest.mark.parametrize("scheme", F.INIT_SCHEMES)
def test_all_schemes_produce_finite_weights(scheme):
    net = F.init_mlp((10, 20, 5), 0, scheme)
    assert all(np.all(np.isfinite(w)) for w in net.weights)


def test_weights_are_read_only():
    net = F.init_mlp((2, 3), 0)
    with pytest.raises(ValueError):
        net.weights[0][0, 0] = 1.0


def test_hand_evaluated_hidden_layer():
    net = F.FixedMlp((2, 2), (np.eye(2),), (np.zeros(2),), final_activation=True)
    np.testing.assert_array_equal(net.forward(np.array([[1.0, -1.0]])), [[1.0, 0.0]])


def test_zero_input_zero_bias_gives_zero():
    rng = np.random.default_rng(0)
    ws = (rng.standard_normal((4, 6)), rng.standard_normal((6, 3)))
    net = F.FixedMlp((4, 6, 3), ws, (np.zeros(6), np.zeros(3)))
    np.testing.assert_array_equal(net.forward(np.zeros((2, 4))), 0.0)


def test_forward_composes_layers():
    net = F.init_mlp((5, 7, 6, 4), seed=3)
    x = np.random.default_rng(1).standard_normal((9, 5))
    h = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < 2:
            h = np.maximum(h, 0)
    np.testing.assert_allclose(net.forward(x), h, rtol=0, atol=1e-13)


def test_final_layer_positive_homogeneity():
    net = F.init_mlp((3, 5, 4), seed=2)
    for final in (False, True):
        base = F.FixedMlp(net.layer_dims, net.weights, net.biases, final)
        scaled = F.FixedMlp(net.layer_dims, (net.weights[0], 4.0 * net.weights[1]),
                            (net.biases[0], 4.0 * net.biases[1]), final)
        x = np.random.default_rng(0).standard_normal((6, 3))
        np.testing.assert_array_equal(scaled.forward(x), 4.0 * base.forward(x))


def test_width_mismatch():
    with pytest.raises(DimensionError):
        F.init_mlp((3, 4), 0).forward(np.ones((2, 5)))


def test_slfn_has_activated_features():
    net = F.init_slfn(10, 30, seed=0)
    assert net.n_layers == 1 and net.final_activation
    assert np.all(net.forward(np.random.default_rng(0).standard_normal((4, 10))) >= 0)


def test_trunk_layout():
    net = F.init_trunk_mlp(1, 16, seed=0)
    assert net.layer_dims == (1, 16, 16, 16)
    assert net.forward(np.linspace(0, 1, 5)).shape == (5, 16)


def naive_conv(x, k, b, stride):
    n, cin, h, w = x.shape
    cout, _, ks, _ = k.shape
    pad = ks // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - ks) // stride + 1
    wo = (w + 2 * pad - ks) // stride + 1
    out = np.zeros((n, cout, ho, wo))
    for i in range(ho):
        for j in range(wo):
            patch = xp[:, :, i * stride:i * stride + ks, j * stride:j * stride + ks]
            out[:, :, i, j] = np.tensordot(patch, k, axes=([1, 2, 3], [1, 2, 3])) + b
    return out


def test_conv_matches_naive_loop():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 3, 9, 9))
    k = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)
    np.testing.assert_allclose(F._conv2d(x, k, b, 2), naive_conv(x, k, b, 2), atol=1e-12)


def test_convnet_shapes_and_determinism():
    net = F.init_convnet(50, 40, seed=1)
    assert net.channels == (1, 8, 16, 32)
    assert net.head.layer_dims == (32 * 7 * 7, 256, 40)
    x = np.random.default_rng(0).standard_normal((3, 2500))
    out = net.forward(x)
    assert out.shape == (3, 40)
    np.testing.assert_array_equal(out, F.init_convnet(50, 40, seed=1).forward(x))
    with pytest.raises(DimensionError):
        net.forward(np.ones((1, 2401)))


def test_sinusoidal_1d_values():
    b = F.SinusoidalBasis(1, 2)
    np.testing.assert_array_equal(b.forward(np.array([0.0])), [[0.0, 1.0]])
    # frequency 32*1*pi/(2*2) = 8 pi
    assert b.frequencies()[0] == pytest.approx(8 * np.pi)
    assert b.forward(np.array([1.0 / 16]))[0, 0] == pytest.approx(1.0)


def test_sinusoidal_1d_block_order():
    b = F.SinusoidalBasis(1, 6)
    y = np.array([0.3])
    freqs = 32 * np.arange(1, 4) * np.pi / 12
    np.testing.assert_allclose(b.forward(y)[0], np.concatenate([np.sin(freqs * 0.3), np.cos(freqs * 0.3)]))


def test_sinusoidal_1d_needs_even_p2():
    with pytest.raises(DimensionError):
        F.SinusoidalBasis(1, 3)


@pytest.mark.parametrize("p2", [2, 4, 8])
def test_sinusoidal_1d_discrete_orthogonality(p2):
    # frequencies 16 k pi / p2 are multiples of 2 pi only when p2 divides 8
    y = np.linspace(0, 1, 100)
    t = F.SinusoidalBasis(1, p2).forward(y)
    gram = t.T @ t / len(y)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 0.05


def test_sinusoidal_1d_not_orthogonal_for_large_p2():
    y = np.linspace(0, 1, 100)
    t = F.SinusoidalBasis(1, 100).forward(y)
    gram = t.T @ t / len(y)
    assert np.max(np.abs(gram - np.diag(np.diag(gram)))) > 0.05


def test_sinusoidal_2d_center_and_boundary():
    b = F.SinusoidalBasis(2, 8)
    assert b.terms() == [(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]
    assert b.forward(np.array([[0.5, 0.5]]))[0, 0] == pytest.approx(1.0)
    edge = np.column_stack([np.zeros(7), np.linspace(0, 1, 7)])
    assert np.max(np.abs(b.forward(edge))) < 1e-15
    edge = np.column_stack([np.linspace(0, 1, 7), np.ones(7)])
    assert np.max(np.abs(b.forward(edge))) < 1e-14


def test_sinusoidal_2d_families_are_signed_copies():
    b = F.SinusoidalBasis(2, 12)
    pts = np.random.default_rng(0).uniform(size=(20, 2))
    t = b.forward(pts)
    ref = np.sin(np.pi * pts[:, :1] * np.arange(1, 4)) * np.sin(np.pi * pts[:, 1:] * np.arange(1, 4))
    np.testing.assert_allclose(t[:, 0:3], ref, atol=1e-12)
    np.testing.assert_allclose(t[:, 3:6], -ref, atol=1e-12)
    np.testing.assert_allclose(t[:, 9:12], ref, atol=1e-12)


def test_evaluate_basis_dimension_mismatch():
    with pytest.raises(DimensionError):
        F.evaluate_basis(F.SinusoidalBasis(2, 4), np.ones((3, 1)))


@pytest.mark.parametrize("make", [
    lambda: F.init_mlp((4, 6, 3), 9, final_activation=True),
    lambda: F.init_convnet(12, 5, seed=2, fc_width=16),
    lambda: F.SinusoidalBasis(2, 6),
])
def test_container_round_trip_is_bit_exact(tmp_path, make):
    fmap = make()
    meta, arrays = F.to_container(fmap)
    eio.save_container(tmp_path / "f.elmc", meta, arrays)
    meta2, arrays2 = eio.load_container(tmp_path / "f.elmc")
    back = F.from_container(meta2, arrays2)
    assert F.digest(back) == F.digest(fmap)
    x = np.random.default_rng(0).uniform(size=(3, fmap.in_dim))
    assert back.forward(x).tobytes() == fmap.forward(x).tobytes()
