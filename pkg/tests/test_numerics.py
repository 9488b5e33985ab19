import numpy as np
import pytest

from qclass.numerics import (
    Rng,
    as_matrix,
    finite_difference_grad,
    matmul,
    max_relative_error,
)


def test_as_matrix_promotes_vectors_to_columns():
    out = as_matrix([1.0, 2.0, 3.0])
    assert out.shape == (3, 1)
    assert out.dtype == np.float64


def test_as_matrix_keeps_2d_and_rejects_3d():
    out = as_matrix([[1, 2], [3, 4]])
    assert out.shape == (2, 2)
    with pytest.raises(ValueError):
        as_matrix(np.zeros((2, 2, 2)))


def test_matmul_matches_numpy_on_random_shapes():
    rng = Rng(7)
    for _ in range(25):
        a = rng.normal(0.0, 1.0, (rng.integers(1, 6), rng.integers(1, 6)))
        b = rng.normal(0.0, 1.0, (a.shape[1], rng.integers(1, 6)))
        assert np.array_equal(matmul(a, b), a @ b)


def test_matmul_error_names_both_shapes():
    with pytest.raises(ValueError, match=r"\(2, 3\).*\(4, 2\)"):
        matmul(np.zeros((2, 3)), np.zeros((4, 2)))


def test_rng_same_seed_same_stream():
    a = Rng(42).normal(0.0, 1.0, 10)
    b = Rng(42).normal(0.0, 1.0, 10)
    assert np.array_equal(a, b)


def test_rng_different_seeds_differ():
    a = Rng(1).normal(0.0, 1.0, 10)
    b = Rng(2).normal(0.0, 1.0, 10)
    assert not np.array_equal(a, b)


def test_rng_child_streams_are_deterministic_and_distinct():
    base = Rng(5)
    c0 = base.child(0).normal(0.0, 1.0, 8)
    c0_again = Rng(5).child(0).normal(0.0, 1.0, 8)
    c1 = Rng(5).child(1).normal(0.0, 1.0, 8)
    nested = Rng(5).child(0, 3).normal(0.0, 1.0, 8)
    assert np.array_equal(c0, c0_again)
    assert not np.array_equal(c0, c1)
    assert not np.array_equal(c0, nested)


def test_rng_normal_statistics():
    draws = Rng(123).normal(0.0, 1.0, 1_000_000)
    assert abs(float(np.mean(draws))) < 0.01
    assert 0.99 < float(np.std(draws)) < 1.01


def test_rng_normal_rejects_negative_stdev():
    with pytest.raises(ValueError):
        Rng(0).normal(0.0, -1.0)


def test_rng_permutation_is_a_permutation():
    for seed in range(5):
        perm = Rng(seed).permutation(20)
        assert sorted(perm.tolist()) == list(range(20))


def test_rng_integers_bounds():
    rng = Rng(9)
    draws = [rng.integers(2, 5) for _ in range(200)]
    assert set(draws) == {2, 3, 4}


def test_finite_difference_matches_quadratic_gradient():
    rng = Rng(3)
    for _ in range(10):
        x = rng.normal(0.0, 1.0, 6)
        a = rng.normal(0.0, 1.0, 6)

        def f(v):
            return float(np.sum(a * v * v))

        grad = finite_difference_grad(f, x)
        assert np.allclose(grad, 2.0 * a * x, atol=1e-6)


def test_finite_difference_preserves_shape():
    x = np.arange(6.0).reshape(2, 3)
    grad = finite_difference_grad(lambda v: float(np.sum(v**2)), x)
    assert grad.shape == (2, 3)
    assert np.allclose(grad, 2.0 * x, atol=1e-6)


def test_finite_difference_reports_nonfinite_coordinate():
    def f(v):
        return float("nan") if v[1] > 0.5 else float(v.sum())

    with pytest.raises(ValueError, match="coordinate 1"):
        finite_difference_grad(f, np.array([0.0, 0.5, 0.0]))


def test_finite_difference_rejects_bad_eps():
    with pytest.raises(ValueError):
        finite_difference_grad(lambda v: 0.0, np.zeros(2), eps=0.0)


def test_max_relative_error_floors_denominator():
    # Near-zero coordinates: a raw relative error would explode, the
    # floored version reports the absolute difference instead.
    assert max_relative_error([1e-9], [0.0]) == pytest.approx(1e-9)
    assert max_relative_error([2.0], [1.0]) == pytest.approx(0.5)
    assert max_relative_error([0.0, 3.0], [0.0, 3.0]) == 0.0


def test_max_relative_error_shape_mismatch():
    with pytest.raises(ValueError):
        max_relative_error(np.zeros(2), np.zeros(3))
