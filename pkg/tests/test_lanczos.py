import numpy as np
import pytest

from oscdmrg import ConvergenceError, dense_sym_eig, lowest_k


def _random_symmetric(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    return 0.5 * (a + a.T)


def test_dense_identity_and_permutation():
    res = dense_sym_eig(np.eye(4))
    np.testing.assert_allclose(res.values, np.ones(4), atol=1e-14)
    res = dense_sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(res.values, [1.0, 2.0, 3.0], atol=1e-14)
    # eigenvectors are basis permutations for a diagonal matrix
    np.testing.assert_allclose(np.abs(res.vectors), np.eye(3)[:, [1, 2, 0]], atol=1e-12)


def test_dense_reconstruction():
    mat = _random_symmetric(30, seed=5)
    res = dense_sym_eig(mat)
    rebuilt = res.vectors @ np.diag(res.values) @ res.vectors.T
    assert np.max(np.abs(rebuilt - mat)) <= 1e-9
    np.testing.assert_allclose(res.vectors.T @ res.vectors, np.eye(30), atol=1e-10)


def test_dense_rejects_bad_input():
    with pytest.raises(ValueError):
        dense_sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        dense_sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        dense_sym_eig(np.ones((2, 3)))


def test_lowest_k_diagonal():
    mat = np.diag([1.0, 2.0, 3.0, 4.0, 5.0])
    res = lowest_k(lambda v: mat @ v, 5, 2)
    np.testing.assert_allclose(res.values, [1.0, 2.0], atol=1e-10)


def test_lowest_k_full_spectrum_tiny():
    mat = np.array([[0.0, 1.0], [1.0, 0.0]])
    res = lowest_k(lambda v: mat @ v, 2, 2)
    np.testing.assert_allclose(res.values, [-1.0, 1.0], atol=1e-12)


def test_lowest_k_matches_dense_60():
    mat = _random_symmetric(60, seed=11)
    res = lowest_k(lambda v: mat @ v, 60, 5)
    dense = dense_sym_eig(mat)
    np.testing.assert_allclose(res.values, dense.values[:5], atol=1e-9)


@pytest.mark.parametrize("dim,k,seed", [(80, 1, 0), (150, 3, 1), (200, 5, 2), (200, 2, 3)])
def test_lowest_k_matches_dense_randomized(dim, k, seed):
    mat = _random_symmetric(dim, seed=seed)
    res = lowest_k(lambda v: mat @ v, dim, k, tol=1e-10, seed=seed)
    dense = np.linalg.eigvalsh(mat)
    np.testing.assert_allclose(res.values, dense[:k], atol=1e-8)
    # result invariants: ordering, orthonormality, residual bound
    assert np.all(np.diff(res.values) >= -1e-12)
    gram = res.vectors.T @ res.vectors
    np.testing.assert_allclose(gram, np.eye(k), atol=1e-8)
    for i in range(k):
        r = mat @ res.vectors[:, i] - res.values[i] * res.vectors[:, i]
        assert np.linalg.norm(r) <= 1e-10 * max(1.0, abs(res.values[i])) * 1.001


def test_lowest_k_deterministic():
    mat = _random_symmetric(120, seed=9)
    r1 = lowest_k(lambda v: mat @ v, 120, 3, seed=17)
    r2 = lowest_k(lambda v: mat @ v, 120, 3, seed=17)
    assert np.array_equal(r1.values, r2.values)
    assert np.array_equal(r1.vectors, r2.vectors)


def test_lowest_k_degenerate_pair():
    # exact double degeneracy of the lowest eigenvalue
    mat = np.diag([1.0, 1.0, 2.0, 3.0] + list(np.linspace(4, 20, 396)))
    res = lowest_k(lambda v: mat @ v, 400, 3, seed=4)
    np.testing.assert_allclose(res.values, [1.0, 1.0, 2.0], atol=1e-8)


def test_lowest_k_argument_errors():
    mat = np.eye(4)
    with pytest.raises(ValueError):
        lowest_k(lambda v: mat @ v, 4, 5)
    with pytest.raises(ValueError):
        lowest_k(lambda v: mat @ v, 4, 0)
    with pytest.raises(ValueError):
        lowest_k(lambda v: mat @ v, 4, 2, tol=0.0)


def test_lowest_k_convergence_error_carries_residuals():
    mat = _random_symmetric(500, seed=3)
    with pytest.raises(ConvergenceError) as info:
        lowest_k(lambda v: mat @ v, 500, 2, tol=1e-12, max_iter=8, seed=0)
    assert info.value.residual_norms is not None
    assert info.value.residual_norms.shape == (2,)
    assert np.all(info.value.residual_norms > 0)


def test_lowest_k_warm_start():
    mat = _random_symmetric(500, seed=21)
    dense = np.linalg.eigvalsh(mat)[:2]
    cold = lowest_k(lambda v: mat @ v, 500, 2, seed=1)
    warm = lowest_k(lambda v: mat @ v, 500, 2, seed=1, v0=cold.vectors)
    np.testing.assert_allclose(warm.values, dense, atol=1e-8)
    assert warm.iterations <= cold.iterations
