import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elmdeeponet import io as eio
from elmdeeponet.linalg import (DegenerateSampleError, DimensionError, fit_bilinear,
                                frobenius_norm, pseudoinverse, relative_l2_error)


def inv3(m):
    """Explicit 3x3 inverse by cofactors."""
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    cof = np.array([[e * i - f * h, -(d * i - f * g), d * h - e * g],
                    [-(b * i - c * h), a * i - c * g, -(a * h - b * g)],
                    [b * f - c * e, -(a * f - c * d), a * e - b * d]])
    det = a * cof[0, 0] + b * cof[0, 1] + c * cof[0, 2]
    return cof.T / det


def random_rank(rng, rows, cols, rank):
    return rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))


def test_pinv_identity():
    np.testing.assert_array_equal(pseudoinverse(np.eye(3)), np.eye(3))


def test_pinv_rank_deficient_diagonal():
    np.testing.assert_allclose(pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=0)


def test_pinv_full_column_rank_matches_explicit_left_inverse():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 3))
    oracle = inv3(a.T @ a) @ a.T
    ap = pseudoinverse(a)
    np.testing.assert_allclose(ap, oracle, atol=1e-12)
    assert np.max(np.abs(ap @ a - np.eye(3))) < 1e-10


def test_pinv_full_row_rank_is_right_inverse():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 5))
    oracle = a.T @ inv3(a @ a.T)
    np.testing.assert_allclose(pseudoinverse(a), oracle, atol=1e-12)


def test_pinv_rejects_empty():
    with pytest.raises(DimensionError):
        pseudoinverse(np.zeros((0, 3)))


@pytest.mark.parametrize("shape", [(5, 3), (3, 5)])
@pytest.mark.parametrize("rank", [1, 2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_moore_penrose_conditions(shape, rank, seed):
    a = random_rank(np.random.default_rng(seed), *shape, rank)
    ap = pseudoinverse(a)
    assert ap.shape == shape[::-1]
    assert np.max(np.abs(a @ ap @ a - a)) < 1e-8
    assert np.max(np.abs(ap @ a @ ap - ap)) < 1e-8
    assert np.max(np.abs((a @ ap).T - a @ ap)) < 1e-8
    assert np.max(np.abs((ap @ a).T - ap @ a)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_moore_penrose_property(rows, cols, seed):
    rng = np.random.default_rng(seed)
    rank = rng.integers(1, min(rows, cols) + 1)
    a = random_rank(rng, rows, cols, rank)
    ap = pseudoinverse(a)
    scale = max(1.0, np.abs(a).max())
    assert np.max(np.abs(a @ ap @ a - a)) < 1e-8 * scale


def test_ridge_shrinks_toward_zero():
    a = np.diag([2.0, 1.0])
    np.testing.assert_allclose(pseudoinverse(a, ridge=1.0), np.diag([0.4, 0.5]))


def test_fit_identity_factors_returns_g():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((4, 6))
    np.testing.assert_allclose(fit_bilinear(np.eye(4), np.eye(6), g), g, atol=1e-14)


def test_fit_exact_interpolation():
    rng = np.random.default_rng(1)
    t = rng.standard_normal((3, 2))
    b = rng.standard_normal((2, 3))
    w0 = rng.standard_normal((2, 2))
    w = fit_bilinear(t, b, t @ w0 @ b)
    assert np.max(np.abs(w - w0)) < 1e-10


def test_fit_stationarity():
    rng = np.random.default_rng(2)
    t = rng.standard_normal((10, 4))
    b = rng.standard_normal((4, 10))
    g = rng.standard_normal((10, 10))
    w = fit_bilinear(t, b, g)
    grad = t.T @ (t @ w @ b - g) @ b.T
    assert np.max(np.abs(grad)) < 1e-8


def test_fit_beats_random_perturbations():
    rng = np.random.default_rng(5)
    t = rng.standard_normal((20, 5))
    b = rng.standard_normal((7, 30))
    g = rng.standard_normal((20, 30))
    w = fit_bilinear(t, b, g)
    best = frobenius_norm(t @ w @ b - g)
    for _ in range(100):
        e = rng.standard_normal(w.shape) * rng.choice([1e-3, 1e-1, 1.0])
        assert best <= frobenius_norm(t @ (w + e) @ b - g)


def kron_oracle(t, b, g):
    """Solve the vectorized normal equations directly.

    With column-major vec, vec(T W B) = (B^T kron T) vec(W).
    """
    k = np.kron(b.T, t)
    rhs = g.reshape(-1, order="F")
    vec_w = np.linalg.solve(k.T @ k, k.T @ rhs)
    return vec_w.reshape(t.shape[1], b.shape[0], order="F")


@pytest.mark.parametrize("seed", range(10))
def test_fit_matches_kronecker_normal_equations(seed):
    rng = np.random.default_rng(seed)
    p2 = int(rng.integers(1, 7))
    p1 = int(rng.integers(1, 37 // p2 + 1))
    p1 = min(p1, 6)
    m = p2 + int(rng.integers(0, 5))
    n = p1 + int(rng.integers(0, 5))
    t = rng.standard_normal((m, p2))
    b = rng.standard_normal((p1, n))
    g = rng.standard_normal((m, n))
    assert p1 * p2 <= 36
    np.testing.assert_allclose(fit_bilinear(t, b, g), kron_oracle(t, b, g), atol=1e-6)


def test_fit_dimension_mismatch():
    with pytest.raises(DimensionError):
        fit_bilinear(np.ones((3, 2)), np.ones((2, 4)), np.ones((3, 5)))


def test_fit_overparameterized_still_returns_pinv_solution():
    rng = np.random.default_rng(7)
    t = rng.standard_normal((4, 9))   # p2 > M
    b = rng.standard_normal((12, 5))  # p1 > N
    g = rng.standard_normal((4, 5))
    w = fit_bilinear(t, b, g)
    np.testing.assert_allclose(w, np.linalg.pinv(t) @ g @ np.linalg.pinv(b), atol=1e-10)
    np.testing.assert_allclose(t @ w @ b, g, atol=1e-10)


def test_frobenius_examples():
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    assert frobenius_norm(np.array([[3.0, 4.0]])) == 5.0
    assert frobenius_norm(np.eye(4)) == 2.0


def test_relative_error_examples():
    truth = np.array([[1.0, 2.0], [0.0, -1.0]])
    assert relative_l2_error(truth, truth) == 0.0
    assert relative_l2_error(np.array([[1.0], [1.0]]), np.array([[1.0], [0.0]])) == 1.0
    assert relative_l2_error(1.01 * truth, truth) == pytest.approx(0.01, abs=1e-14)
    with pytest.raises(DegenerateSampleError):
        relative_l2_error(truth, np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_elmm_layout_and_round_trip():
    a = np.arange(6, dtype=float).reshape(2, 3) / 7.0
    data = eio.matrix_to_bytes(a)
    magic, version, rows, cols = struct.unpack("<4sIQQ", data[:24])
    assert (magic, version, rows, cols) == (b"ELMM", 1, 2, 3)
    assert len(data) == 24 + 6 * 8
    assert struct.unpack("<d", data[24 + 8:24 + 16])[0] == a[0, 1]
    np.testing.assert_array_equal(eio.matrix_from_bytes(data), a)


def test_elmm_rejects_bad_magic():
    with pytest.raises(eio.FormatError):
        eio.read_matrix(io.BytesIO(b"XXXX" + bytes(20)))


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 3))
    eio.save_csv(tmp_path / "a.csv", a)
    text = (tmp_path / "a.csv").read_text()
    assert text.count("\n") == 4 and "," in text
    np.testing.assert_array_equal(eio.load_csv(tmp_path / "a.csv"), a)


def test_container_round_trip(tmp_path):
    arrays = {"x": np.eye(2), "y": np.array([[1.5, -2.0, 3.0]])}
    eio.save_container(tmp_path / "c.elmc", {"name": "demo"}, arrays)
    meta, back = eio.load_container(tmp_path / "c.elmc")
    assert meta["name"] == "demo" and meta["arrays"] == ["x", "y"]
    for k in arrays:
        np.testing.assert_array_equal(back[k], arrays[k])
