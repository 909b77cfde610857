"""k-step powers and sub-walk restriction."""

import numpy as np
import pytest

from walkcut.walk import WalkConfig, matrix_power, restrict_renormalize


def random_stochastic(n, rng):
    a = rng.random((n, n)) + 1e-3
    return a / a.sum(axis=1, keepdims=True)


def test_k_equal_one_is_identity_operation():
    rng = np.random.default_rng(0)
    p = random_stochastic(12, rng)
    out = matrix_power(p, 1)
    np.testing.assert_allclose(out, p, atol=1e-15)
    out[0, 0] = -1.0  # the caller's matrix must not be aliased
    assert p[0, 0] >= 0


def test_matches_naive_repeated_multiplication():
    rng = np.random.default_rng(42)
    for n in (3, 8, 16):
        p = random_stochastic(n, rng)
        naive = p.copy()
        for k in range(2, 9):
            naive = naive @ p
            fast = matrix_power(p, k)
            np.testing.assert_allclose(fast, naive, atol=1e-9)


def test_matches_numpy_matrix_power():
    rng = np.random.default_rng(7)
    p = random_stochastic(10, rng)
    for k in (2, 3, 5, 7, 11, 16):
        want = np.linalg.matrix_power(p, k)
        np.testing.assert_allclose(matrix_power(p, k), want, atol=1e-9)


def test_semigroup_property():
    # P^(a+b) == P^a P^b
    rng = np.random.default_rng(13)
    p = random_stochastic(9, rng)
    lhs = matrix_power(p, 7)
    rhs = matrix_power(p, 3) @ matrix_power(p, 4)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_uniform_matrix_is_idempotent():
    u = np.full((6, 6), 1.0 / 6)
    for k in (1, 2, 5, 16):
        np.testing.assert_allclose(matrix_power(u, k), u, atol=1e-12)


def test_rows_stay_stochastic():
    rng = np.random.default_rng(99)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        p = random_stochastic(n, rng)
        k = int(rng.integers(1, 17))
        out = matrix_power(p, k)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
        assert (out >= 0).all()


def test_rejects_bad_k_and_shapes():
    p = np.full((3, 3), 1.0 / 3)
    for bad in (0, -1, 17, 2.0, True):
        with pytest.raises(ValueError):
            matrix_power(p, bad)
    with pytest.raises(ValueError):
        matrix_power(np.ones((2, 3)), 2)


def test_rejects_non_stochastic_input():
    with pytest.raises(ValueError):
        matrix_power(np.eye(3) * 2.0, 2)


def test_walk_config_validation():
    assert WalkConfig().k == 1
    assert WalkConfig(k=16).k == 16
    for bad in (0, 17, 1.5, True):
        with pytest.raises(ValueError):
            WalkConfig(k=bad)


def test_restrict_renormalize_rows():
    rng = np.random.default_rng(5)
    p = random_stochastic(10, rng)
    idx = np.array([7, 2, 5])
    sub = restrict_renormalize(p, idx)
    assert sub.shape == (3, 3)
    np.testing.assert_allclose(sub.sum(axis=1), 1.0, atol=1e-12)
    # entries keep their relative proportions within the kept columns
    want = p[np.ix_(idx, idx)]
    want = want / want.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(sub, want, atol=1e-12)


def test_restrict_dead_row_becomes_uniform():
    p = np.zeros((4, 4))
    p[0, 3] = 1.0  # all of row 0's mass leaves the subset
    p[1, :2] = 0.5
    p[2, 2] = 1.0
    p[3, 3] = 1.0
    sub = restrict_renormalize(p, [0, 1, 2])
    np.testing.assert_allclose(sub[0], 1.0 / 3, atol=1e-15)
    np.testing.assert_allclose(sub.sum(axis=1), 1.0, atol=1e-15)


def test_restrict_rejects_duplicates_and_empty():
    p = np.full((4, 4), 0.25)
    with pytest.raises(ValueError):
        restrict_renormalize(p, [1, 1, 2])
    with pytest.raises(ValueError):
        restrict_renormalize(p, [])
