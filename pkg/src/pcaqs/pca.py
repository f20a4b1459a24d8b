"""Principal components via exact thin SVD, projection, and choice of k."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .ingest import DataError, DataMatrix

RANK_TOL = 1e-10


class SelectionWarning(UserWarning):
    """A k-selection rule could not be satisfied and fell back."""


@dataclass(frozen=True, eq=False)
class PcaModel:
    components: np.ndarray  # k x d, orthonormal rows
    singular_values: np.ndarray
    explained_variance_ratio: np.ndarray
    d_total: int
    eigenvalues_full: np.ndarray
    n_samples: int

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigenvalues_full[: self.k]

    @property
    def ratios_full(self) -> np.ndarray:
        total = self.eigenvalues_full.sum()
        return self.eigenvalues_full / total if total > 0 else np.zeros_like(self.eigenvalues_full)

    def truncate(self, k: int) -> "PcaModel":
        if not 1 <= k <= self.k:
            raise ValueError(f"k must lie in [1, {self.k}], got {k}")
        return PcaModel(
            self.components[:k],
            self.singular_values[:k],
            self.explained_variance_ratio[:k],
            self.d_total,
            self.eigenvalues_full,
            self.n_samples,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "d_total": self.d_total,
                "n_samples": self.n_samples,
                "components": self.components.tolist(),
                "singular_values": self.singular_values.tolist(),
                "explained_variance_ratio": self.explained_variance_ratio.tolist(),
                "eigenvalues_full": self.eigenvalues_full.tolist(),
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "PcaModel":
        doc = json.loads(text)
        return cls(
            np.array(doc["components"], dtype=np.float64).reshape(-1, doc["d_total"]),
            np.array(doc["singular_values"], dtype=np.float64),
            np.array(doc["explained_variance_ratio"], dtype=np.float64),
            int(doc["d_total"]),
            np.array(doc["eigenvalues_full"], dtype=np.float64),
            int(doc["n_samples"]),
        )


def _fix_signs(vt: np.ndarray) -> np.ndarray:
    # largest-magnitude coordinate of each loading vector made positive
    pivot = np.argmax(np.abs(vt), axis=1)
    signs = np.sign(vt[np.arange(vt.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return vt * signs[:, None]


def fit_pca(data, k_max: int | None = None) -> PcaModel:
    """Fit PCA on an (already standardized) matrix.

    The matrix is centered by its own column means before the SVD, which is a
    no-op for standardized input but keeps eigenvalues correct when fitting on
    a subset of rows. Eigenvalues are ``s**2 / (n - 1)``. Components whose
    singular value falls below ``1e-10 * s[0]`` are dropped, so the returned
    model may hold fewer than ``k_max`` rows on rank-deficient data.
    """
    X = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=np.float64)
    n, d = X.shape
    full = min(n - 1, d)
    if full < 1:
        raise DataError(f"need at least 2 rows to fit PCA, got {n}")
    if k_max is None:
        k_max = full
    if not 1 <= k_max <= full:
        raise ValueError(f"k_max must lie in [1, {full}], got {k_max}")
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    s = s[:full]
    vt = vt[:full]
    eig = s**2 / (n - 1)
    total = eig.sum()
    ratios = eig / total if total > 0 else np.zeros_like(eig)
    rank = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    if rank == 0:
        raise DataError("matrix has zero variance; nothing to decompose")
    k = min(k_max, rank)
    return PcaModel(
        components=_fix_signs(vt[:k]),
        singular_values=s[:k].copy(),
        explained_variance_ratio=ratios[:k].copy(),
        d_total=d,
        eigenvalues_full=eig,
        n_samples=n,
    )


def project(model: PcaModel, data) -> np.ndarray:
    """Scores ``values @ components.T`` (n x k)."""
    X = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.d_total:
        raise DataError(f"model expects {model.d_total} columns, got {X.shape[1]}")
    return X @ model.components.T


def default_cap(d: int) -> int:
    return max(1, d // 4)


def default_m(k: int) -> int:
    return max(k, 15)


def select_k_variance(ratios, threshold: float, cap: int) -> int:
    """Smallest k whose cumulative ratio reaches ``threshold``, capped at ``cap``."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0,1), got {threshold}")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    if ratios.size == 0 or np.any(ratios < 0):
        raise ValueError("ratios must be a nonempty nonnegative spectrum")
    cum = np.cumsum(ratios)
    hit = np.flatnonzero(cum >= threshold - 1e-12)
    if hit.size == 0 or hit[0] + 1 > cap:
        reached = "" if hit.size else " (spectrum never reaches it)"
        warnings.warn(
            f"cumulative variance {threshold:.3g} not reached within cap k={cap}{reached}",
            SelectionWarning,
            stacklevel=2,
        )
        return int(min(cap, ratios.size))
    return int(hit[0] + 1)


def select_k_spectral_gap(eigenvalues) -> int:
    """k maximizing lambda_k - lambda_{k+1}; ties go to the smallest k."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    gaps = lam[:-1] - lam[1:]
    if not np.any(gaps > 0):
        warnings.warn("no positive spectral gap; using k=1", SelectionWarning, stacklevel=2)
        return 1
    return int(np.argmax(gaps) + 1)
