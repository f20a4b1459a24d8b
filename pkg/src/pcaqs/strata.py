"""Per-component quantile bins and composite group keys."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SparseGridWarning(UserWarning):
    """m**k exceeds the row count, so most composite groups are singletons."""


def compute_bin_edges(scores, m: int) -> np.ndarray:
    """Interior edges at levels j/m, j = 1..m-1, by linear interpolation
    between order statistics (``numpy.quantile`` default rule)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if scores.size < m:
        raise ValueError(f"need at least m={m} values, got {scores.size}")
    if m == 1:
        return np.empty(0)
    return np.quantile(scores, np.arange(1, m) / m, method="linear")


def assign_bins(scores, edges) -> np.ndarray:
    """Bin index = number of edges <= value, so a value equal to an edge
    lands in the upper bin. Result lies in [0, len(edges)]."""
    return np.searchsorted(np.asarray(edges, dtype=np.float64), np.asarray(scores, dtype=np.float64), side="right")


@dataclass(frozen=True, eq=False)
class QuantileGrid:
    edges: np.ndarray  # k x (m-1)
    m: int

    @property
    def k(self) -> int:
        return self.edges.shape[0]

    @classmethod
    def fit(cls, scores, m: int) -> "QuantileGrid":
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores[:, None]
        n, k = scores.shape
        if float(m) ** k > n:
            warnings.warn(
                f"m^k = {m}^{k} exceeds n = {n}; most composite groups will be singletons",
                SparseGridWarning,
                stacklevel=2,
            )
        edges = np.stack([compute_bin_edges(scores[:, j], m) for j in range(k)])
        return cls(edges.reshape(k, m - 1), m)

    def assign(self, scores) -> np.ndarray:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores[:, None]
        if scores.shape[1] != self.k:
            raise ValueError(f"grid has {self.k} components, scores have {scores.shape[1]}")
        return np.stack([assign_bins(scores[:, j], self.edges[j]) for j in range(self.k)], axis=1)


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    """Composite groups over rows 0..n-1.

    ``codes[i]`` is a dense integer id of row i's group; ``labels[c]`` is the
    string key of group c (bin indices joined by "-").
    """

    codes: np.ndarray
    labels: tuple

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def n_groups(self) -> int:
        return len(self.labels)

    @property
    def keys(self) -> list:
        return [self.labels[c] for c in self.codes]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.codes, minlength=self.n_groups)

    @property
    def group_index(self) -> dict:
        order = np.argsort(self.codes, kind="stable")
        bounds = np.cumsum(self.sizes)[:-1]
        return {self.labels[c]: rows for c, rows in enumerate(np.split(order, bounds))}

    def to_csv(self, path, row_ids=None) -> None:
        row_ids = np.arange(self.n) if row_ids is None else np.asarray(row_ids)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_index", "key"])
            for rid, c in zip(row_ids.tolist(), self.codes.tolist()):
                w.writerow([rid, self.labels[c]])


def composite_keys(bin_matrix) -> GroupAssignment:
    bins = np.asarray(bin_matrix, dtype=np.int64)
    if bins.ndim == 1:
        bins = bins[:, None]
    if bins.size and bins.min() < 0:
        raise ValueError("bin indices must be nonnegative")
    uniq, codes = np.unique(bins, axis=0, return_inverse=True)
    labels = tuple("-".join(str(b) for b in row) for row in uniq.tolist())
    return GroupAssignment(codes.ravel().astype(np.int64), labels)


def stratify(scores, m: int) -> tuple[QuantileGrid, GroupAssignment]:
    grid = QuantileGrid.fit(scores, m)
    return grid, composite_keys(grid.assign(scores))
