"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba versions are used when numba imports cleanly and the environment
variable ``PCAQS_DISABLE_NUMBA`` is unset (or "0"). Both paths compute the same
quantities; they differ only in floating-point summation order.

Every public kernel exists in three spellings: ``<name>`` (dispatching),
``<name>_numba`` and ``<name>_numpy``. Tests and the benchmark script call
the explicit variants directly.
"""

import os

import numpy as np
from scipy.spatial.distance import cdist

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("PCAQS_DISABLE_NUMBA", "0") in ("", "0")
BACKEND = "numba" if USE_NUMBA else "numpy"

# rows of A processed per cdist call in the numpy path
_CHUNK_ELEMS = 4_000_000


def _chunks(n_rows, n_cols):
    step = max(1, _CHUNK_ELEMS // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


# ---------------------------------------------------------------- numpy path


def euclid_row_sums_numpy(A, B):
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    out = np.empty(A.shape[0])
    for lo, hi in _chunks(A.shape[0], B.shape[0]):
        out[lo:hi] = cdist(A[lo:hi], B, "euclidean").sum(axis=1)
    return out


def rbf_row_sums_numpy(A, B, gamma):
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    out = np.empty(A.shape[0])
    for lo, hi in _chunks(A.shape[0], B.shape[0]):
        out[lo:hi] = np.exp(-gamma * cdist(A[lo:hi], B, "sqeuclidean")).sum(axis=1)
    return out


def feature_counts_numpy(X, lo, hi, bins):
    """Per-column equal-width histogram counts over ``[lo[j], hi[j]]``."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    counts = np.zeros((d, bins), dtype=np.int64)
    for j in range(d):
        width = hi[j] - lo[j]
        if width <= 0:
            counts[j, 0] = n
            continue
        idx = np.floor((X[:, j] - lo[j]) / width * bins).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
        counts[j] = np.bincount(idx, minlength=bins)
    return counts


def pair_distances_numpy(X, first, second):
    diff = X[first] - X[second]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


# ---------------------------------------------------------------- numba path

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _euclid_row_sums_nb(A, B):
        n, d = A.shape
        m = B.shape[0]
        out = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(m):
                s = 0.0
                for t in range(d):
                    diff = A[i, t] - B[j, t]
                    s += diff * diff
                acc += np.sqrt(s)
            out[i] = acc
        return out

    @njit(cache=True)
    def _self_row_sums_nb(A, gamma, rbf):
        # symmetric case: visit each unordered pair once
        n, d = A.shape
        out = np.zeros(n)
        diag = 1.0 if rbf else 0.0
        for i in range(n):
            out[i] += diag
            for j in range(i + 1, n):
                s = 0.0
                for t in range(d):
                    diff = A[i, t] - A[j, t]
                    s += diff * diff
                v = np.exp(-gamma * s) if rbf else np.sqrt(s)
                out[i] += v
                out[j] += v
        return out

    @njit(cache=True)
    def _rbf_row_sums_nb(A, B, gamma):
        n, d = A.shape
        m = B.shape[0]
        out = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(m):
                s = 0.0
                for t in range(d):
                    diff = A[i, t] - B[j, t]
                    s += diff * diff
                acc += np.exp(-gamma * s)
            out[i] = acc
        return out

    @njit(cache=True)
    def _feature_counts_nb(X, lo, hi, bins):
        n, d = X.shape
        counts = np.zeros((d, bins), dtype=np.int64)
        for j in range(d):
            width = hi[j] - lo[j]
            for i in range(n):
                if width <= 0.0:
                    b = 0
                else:
                    b = int(np.floor((X[i, j] - lo[j]) / width * bins))
                    if b < 0:
                        b = 0
                    elif b > bins - 1:
                        b = bins - 1
                counts[j, b] += 1
        return counts

    @njit(cache=True)
    def _pair_distances_nb(X, first, second):
        n = first.shape[0]
        d = X.shape[1]
        out = np.empty(n)
        for p in range(n):
            a = first[p]
            b = second[p]
            s = 0.0
            for t in range(d):
                diff = X[a, t] - X[b, t]
                s += diff * diff
            out[p] = np.sqrt(s)
        return out


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def euclid_row_sums_numba(A, B):
    if A is B:
        return _self_row_sums_nb(_f64(A), 0.0, False)
    return _euclid_row_sums_nb(_f64(A), _f64(B))


def rbf_row_sums_numba(A, B, gamma):
    if A is B:
        return _self_row_sums_nb(_f64(A), float(gamma), True)
    return _rbf_row_sums_nb(_f64(A), _f64(B), float(gamma))


def feature_counts_numba(X, lo, hi, bins):
    return _feature_counts_nb(_f64(X), _f64(lo), _f64(hi), int(bins))


def pair_distances_numba(X, first, second):
    return _pair_distances_nb(
        _f64(X), np.ascontiguousarray(first, dtype=np.int64), np.ascontiguousarray(second, dtype=np.int64)
    )


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    euclid_row_sums = euclid_row_sums_numba
    rbf_row_sums = rbf_row_sums_numba
    feature_counts = feature_counts_numba
    pair_distances = pair_distances_numba
else:
    euclid_row_sums = euclid_row_sums_numpy
    rbf_row_sums = rbf_row_sums_numpy
    feature_counts = feature_counts_numpy
    pair_distances = pair_distances_numpy


def backends():
    """Names of the kernel backends usable in this interpreter."""
    return ("numba", "numpy") if NUMBA_AVAILABLE else ("numpy",)
