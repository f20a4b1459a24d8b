"""Two-sample fidelity metrics.

Histogram divergences (KL, JS), energy distance, squared RBF MMD, Mahalanobis
score, a pairwise-distance difference, and the exact 1-D Wasserstein distance.
Natural logarithms throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import xlogy

from . import kernels

DEFAULT_EPS = 1e-10
DEFAULT_BINS = 20
DEFAULT_GAMMA = 1.0
DEFAULT_PAIRS = 10_000


@dataclass(frozen=True, eq=False)
class Histogram:
    probs: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        edges = np.asarray(self.edges, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("probs must be a nonempty vector")
        if edges.shape != (probs.size + 1,):
            raise ValueError(f"need {probs.size + 1} edges, got {edges.shape}")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_probs(cls, probs, edges=None) -> "Histogram":
        probs = np.asarray(probs, dtype=np.float64)
        probs = probs / probs.sum()
        if edges is None:
            edges = np.arange(probs.size + 1, dtype=np.float64)
        return cls(probs, edges)

    @classmethod
    def from_sample(cls, values, edges) -> "Histogram":
        """Frequencies over ``edges``; values outside fall into the end bins."""
        edges = np.asarray(edges, dtype=np.float64)
        values = np.clip(np.asarray(values, dtype=np.float64).ravel(), edges[0], edges[-1])
        counts, _ = np.histogram(values, bins=edges)
        return cls(counts / counts.sum(), edges)


def _check_same(P: Histogram, Q: Histogram):
    if P.edges.shape != Q.edges.shape or not np.array_equal(P.edges, Q.edges):
        raise ValueError("histograms must share the same edges")


def _smooth(p, eps):
    p = p + eps
    return p / p.sum(axis=-1, keepdims=True)


def _kl(p, q, eps):
    if eps > 0:
        p, q = _smooth(p, eps), _smooth(q, eps)
    with np.errstate(divide="ignore"):
        return np.sum(xlogy(p, p) - xlogy(p, q), axis=-1)


def _js(p, q):
    mid = 0.5 * (p + q)
    return 0.5 * (_kl(p, mid, 0.0) + _kl(q, mid, 0.0))


def kl_divergence(P: Histogram, Q: Histogram, eps: float = DEFAULT_EPS) -> float:
    """KL(P||Q) after adding ``eps`` to every cell and renormalizing."""
    _check_same(P, Q)
    return float(max(_kl(P.probs, Q.probs, eps), 0.0))


def js_divergence(P: Histogram, Q: Histogram) -> float:
    _check_same(P, Q)
    return float(min(max(_js(P.probs, Q.probs), 0.0), np.log(2.0)))


# ------------------------------------------------------- feature histograms


def feature_ranges(X):
    X = np.asarray(X, dtype=np.float64)
    return X.min(axis=0), X.max(axis=0)


def feature_probs(X, lo, hi, bins: int = DEFAULT_BINS) -> np.ndarray:
    """d x bins matrix of per-column histogram frequencies."""
    counts = kernels.feature_counts(X, lo, hi, bins).astype(np.float64)
    return counts / counts.sum(axis=1, keepdims=True)


def feature_kl(X_ref, X_sam, bins: int = DEFAULT_BINS, eps: float = DEFAULT_EPS, ranges=None) -> float:
    """Mean over features of KL(ref || sample), equal-width bins over the
    reference range."""
    lo, hi = feature_ranges(X_ref) if ranges is None else ranges
    return float(np.mean(_kl(feature_probs(X_ref, lo, hi, bins), feature_probs(X_sam, lo, hi, bins), eps)))


def feature_js(X_ref, X_sam, bins: int = DEFAULT_BINS, ranges=None) -> float:
    lo, hi = feature_ranges(X_ref) if ranges is None else ranges
    return float(np.mean(_js(feature_probs(X_ref, lo, hi, bins), feature_probs(X_sam, lo, hi, bins))))


def label_js(y_ref, y_sam) -> float:
    """JS divergence between two-cell class frequency vectors."""
    p = np.bincount(np.asarray(y_ref, dtype=np.int64), minlength=2)[:2].astype(float)
    q = np.bincount(np.asarray(y_sam, dtype=np.int64), minlength=2)[:2].astype(float)
    return float(max(_js(p / p.sum(), q / q.sum()), 0.0))


# ------------------------------------------------------------- point sets


def _points(X, name):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return X


def _pair(X, Y):
    X, Y = _points(X, "X"), _points(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return X, Y


def _subsample(X, max_points, rng):
    if max_points is None or X.shape[0] <= max_points:
        return X
    return X[np.sort(rng.choice(X.shape[0], size=max_points, replace=False))]


def energy_distance(X, Y, max_points: Optional[int] = None, seed: int = 0) -> float:
    """``2 E|X-Y| - E|X-X'| - E|Y-Y'|`` with every expectation a mean over all
    ordered pairs, the zero diagonal included (V-statistic, hence >= 0)."""
    X, Y = _pair(X, Y)
    rng = np.random.default_rng(seed)
    X, Y = _subsample(X, max_points, rng), _subsample(Y, max_points, rng)
    xy = kernels.euclid_row_sums(X, Y).sum() / (X.shape[0] * Y.shape[0])
    xx = kernels.euclid_row_sums(X, X).sum() / X.shape[0] ** 2
    yy = kernels.euclid_row_sums(Y, Y).sum() / Y.shape[0] ** 2
    return float(max(2.0 * xy - xx - yy, 0.0))


def mmd_rbf(X, Y, gamma: float = DEFAULT_GAMMA, max_points: Optional[int] = None, seed: int = 0) -> float:
    """Biased squared MMD with kernel ``exp(-gamma |x-y|^2)``."""
    X, Y = _pair(X, Y)
    rng = np.random.default_rng(seed)
    X, Y = _subsample(X, max_points, rng), _subsample(Y, max_points, rng)
    xx = kernels.rbf_row_sums(X, X, gamma).sum() / X.shape[0] ** 2
    yy = kernels.rbf_row_sums(Y, Y, gamma).sum() / Y.shape[0] ** 2
    xy = kernels.rbf_row_sums(X, Y, gamma).sum() / (X.shape[0] * Y.shape[0])
    return float(max(xx + yy - 2.0 * xy, 0.0))


def _cholesky(Sigma):
    # ridge only as a fallback, so the score stays exactly affine invariant
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=np.float64))
    try:
        return np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        pass
    d = Sigma.shape[0]
    try:
        return np.linalg.cholesky(Sigma + 1e-8 * np.trace(Sigma) / d * np.eye(d))
    except np.linalg.LinAlgError:
        raise ValueError("covariance is singular even after regularization") from None


def mahalanobis_score(sample, mu, Sigma) -> float:
    """Mean over sample points of sqrt((x-mu)' Sigma^-1 (x-mu)).

    A singular Sigma is replaced by ``Sigma + 1e-8 tr(Sigma)/d I``.
    """
    X = _points(sample, "sample")
    mu = np.asarray(mu, dtype=np.float64).ravel()
    if X.shape[1] != mu.size:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {mu.size}")
    L = _cholesky(Sigma)
    W = solve_triangular(L, (X - mu).T, lower=True)
    return float(np.mean(np.sqrt(np.einsum("ij,ij->j", W, W))))


def _random_pairs(n, n_pairs, rng):
    first = rng.integers(0, n, size=n_pairs)
    second = (first + rng.integers(1, n, size=n_pairs)) % n
    return first, second


def pairwise_distance_difference(X_ref, X_sam, n_pairs: int = DEFAULT_PAIRS, seed: int = 0) -> float:
    """Quantile-matched comparison of pairwise distances.

    ``n_pairs`` random pairs (i != j) are drawn from each set with two
    identically seeded streams; the sorted distance samples are compared
    elementwise and the mean absolute difference returned.
    """
    X_ref, X_sam = _pair(X_ref, X_sam)
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if X_ref.shape[0] < 2 or X_sam.shape[0] < 2:
        raise ValueError("both sets need at least 2 points")
    a, b = _random_pairs(X_ref.shape[0], n_pairs, np.random.default_rng(seed))
    c, d = _random_pairs(X_sam.shape[0], n_pairs, np.random.default_rng(seed))
    ref = np.sort(kernels.pair_distances(X_ref, a, b))
    sam = np.sort(kernels.pair_distances(X_sam, c, d))
    return float(np.mean(np.abs(ref - sam)))


def wasserstein_1d(a, b) -> float:
    """Exact W1 between two empirical measures: the integral of |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein_1d needs nonempty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    grid = np.concatenate((a, b))
    grid.sort(kind="mergesort")
    widths = np.diff(grid)
    Fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    Fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(Fa - Fb) * widths))


def feature_w1(X_ref, X_sam) -> float:
    X_ref, X_sam = _pair(X_ref, X_sam)
    return float(np.mean([wasserstein_1d(X_ref[:, j], X_sam[:, j]) for j in range(X_ref.shape[1])]))


# ------------------------------------------------------- reference caching


class ReferenceSet:
    """Full-data statistics reused across many subsets of the same rows.

    For a subset S of the reference X with complement R, the self-sum over S
    equals ``sum_S r - sum_R r + D(R, R)`` where ``r`` holds each row's summed
    distance (or kernel value) to all of X. After one O(n^2) pass, energy and
    MMD of any subset cost O(min(|S|, |R|)^2) and stay exact.
    """

    def __init__(self, X, gamma: float = DEFAULT_GAMMA, bins: int = DEFAULT_BINS, eps: float = DEFAULT_EPS):
        self.X = np.ascontiguousarray(_points(X, "X"))
        self.gamma = float(gamma)
        self.bins = bins
        self.eps = eps
        self.ranges = feature_ranges(self.X)
        self.ref_probs = feature_probs(self.X, *self.ranges, bins)
        self.mean = self.X.mean(axis=0)
        self.cov = np.atleast_2d(np.cov(self.X, rowvar=False, ddof=1))
        self._dist_rows = None
        self._rbf_rows = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def _rows(self, kind):
        if kind == "dist":
            if self._dist_rows is None:
                self._dist_rows = kernels.euclid_row_sums(self.X, self.X)
            return self._dist_rows
        if self._rbf_rows is None:
            self._rbf_rows = kernels.rbf_row_sums(self.X, self.X, self.gamma)
        return self._rbf_rows

    def _self_sum(self, idx, kind):
        rows = self._rows(kind)
        inside = np.zeros(self.n, dtype=bool)
        inside[idx] = True
        S, R = np.flatnonzero(inside), np.flatnonzero(~inside)
        pair = kernels.euclid_row_sums if kind == "dist" else (lambda A, B: kernels.rbf_row_sums(A, B, self.gamma))
        if S.size <= R.size:
            sub = self.X[S]
            return pair(sub, sub).sum(), rows[S].sum(), S.size
        rest = self.X[R]
        rr = pair(rest, rest).sum() if R.size else 0.0
        return rows[S].sum() - rows[R].sum() + rr, rows[S].sum(), S.size

    def energy(self, idx) -> float:
        ss, cross, s = self._self_sum(np.asarray(idx), "dist")
        n = self.n
        xx = self._rows("dist").sum() / n**2
        return float(max(2.0 * cross / (n * s) - xx - ss / s**2, 0.0))

    def mmd(self, idx) -> float:
        ss, cross, s = self._self_sum(np.asarray(idx), "rbf")
        n = self.n
        xx = self._rows("rbf").sum() / n**2
        return float(max(xx + ss / s**2 - 2.0 * cross / (n * s), 0.0))

    def kl(self, idx) -> float:
        q = feature_probs(self.X[idx], *self.ranges, self.bins)
        return float(np.mean(_kl(self.ref_probs, q, self.eps)))

    def js(self, idx) -> float:
        q = feature_probs(self.X[idx], *self.ranges, self.bins)
        return float(np.mean(_js(self.ref_probs, q)))

    def mahalanobis(self, idx) -> float:
        return mahalanobis_score(self.X[idx], self.mean, self.cov)
