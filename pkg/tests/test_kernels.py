import numpy as np
import pytest

from pcaqs import kernels

needs_numba = pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not installed")


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    return rng.normal(size=(257, 5)), rng.normal(size=(131, 5))


def test_backend_flag_is_consistent():
    assert kernels.BACKEND in kernels.backends()
    assert (kernels.BACKEND == "numba") == kernels.USE_NUMBA


def test_numpy_row_sums_against_loops(data):
    A, B = data[0][:20], data[1][:15]
    D = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))
    np.testing.assert_allclose(kernels.euclid_row_sums_numpy(A, B), D.sum(1), rtol=1e-12)
    np.testing.assert_allclose(kernels.rbf_row_sums_numpy(A, B, 0.3), np.exp(-0.3 * D**2).sum(1), rtol=1e-12)


def test_feature_counts_numpy_against_histogram(data):
    X = data[0]
    lo, hi = X.min(0), X.max(0)
    counts = kernels.feature_counts_numpy(X, lo, hi, 7)
    for j in range(X.shape[1]):
        want, _ = np.histogram(X[:, j], bins=np.linspace(lo[j], hi[j], 8))
        np.testing.assert_array_equal(counts[j], want)


def test_feature_counts_constant_column():
    X = np.ones((10, 1))
    assert kernels.feature_counts_numpy(X, X.min(0), X.max(0), 4).sum() == 10


@needs_numba
def test_numba_matches_numpy(data):
    A, B = data
    np.testing.assert_allclose(kernels.euclid_row_sums_numba(A, B), kernels.euclid_row_sums_numpy(A, B), rtol=1e-12)
    np.testing.assert_allclose(kernels.rbf_row_sums_numba(A, B, 1.0), kernels.rbf_row_sums_numpy(A, B, 1.0), rtol=1e-12)
    # symmetric self path
    np.testing.assert_allclose(kernels.euclid_row_sums_numba(A, A), kernels.euclid_row_sums_numpy(A, A), rtol=1e-12)
    np.testing.assert_allclose(kernels.rbf_row_sums_numba(A, A, 0.4), kernels.rbf_row_sums_numpy(A, A, 0.4), rtol=1e-12)
    lo, hi = A.min(0) + 0.3, A.max(0) - 0.3
    np.testing.assert_array_equal(kernels.feature_counts_numba(A, lo, hi, 20), kernels.feature_counts_numpy(A, lo, hi, 20))
    rng = np.random.default_rng(1)
    i, j = rng.integers(0, len(A), 500), rng.integers(0, len(A), 500)
    np.testing.assert_allclose(kernels.pair_distances_numba(A, i, j), kernels.pair_distances_numpy(A, i, j), rtol=1e-12)
