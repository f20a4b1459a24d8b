"""Stratified PCA-QS draws and the simple-random-sampling baseline."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .strata import GroupAssignment

PCA_QS = "PCA-QS"
SRS = "SRS"

# products this close (relative) to an integer are taken as that integer, so
# decimal rates such as 0.07 * 100 give 7 rather than 8
_INT_SNAP = 1e-12

# stream tags mixed into the seed so the draws never share a bit stream
_STREAM_GROUPS = 0x51
_STREAM_TRIM = 0x7E
_STREAM_SRS = 0x5A


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def _ceil_rate(delta, count):
    x = np.asarray(delta, dtype=np.float64) * np.asarray(count, dtype=np.float64)
    r = np.rint(x)
    snapped = np.abs(x - r) <= _INT_SNAP * np.maximum(1.0, np.abs(x))
    return np.where(snapped, r, np.ceil(x)).astype(np.int64)


def group_retention(n_group, delta):
    """``min(ceil(delta * N_g), N_g)``; works elementwise on arrays."""
    n_group = np.asarray(n_group, dtype=np.int64)
    if np.any(n_group < 0):
        raise ValueError("group sizes must be nonnegative")
    if not np.all((np.asarray(delta) > 0) & (np.asarray(delta) <= 1)):
        raise ValueError(f"delta must lie in (0,1], got {delta}")
    out = np.minimum(_ceil_rate(delta, n_group), n_group)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SamplePlan:
    method: str
    retained: np.ndarray
    delta: float
    seed: int
    per_group_counts: dict = field(default_factory=dict)
    trimmed_from: Optional[int] = None

    @property
    def size(self) -> int:
        return int(self.retained.shape[0])

    def to_csv(self, path, row_ids=None) -> None:
        ids = self.retained if row_ids is None else np.asarray(row_ids)[self.retained]
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index"])
            for i in ids.tolist():
                w.writerow([i])


def pcaqs_sample(
    assignment: GroupAssignment, delta: float, seed: int, exact_size: Optional[int] = None
) -> SamplePlan:
    """Uniform without-replacement draw of ``group_retention(N_g, delta)`` rows
    from every composite group.

    Every row gets one uniform priority from a stream keyed by ``seed`` alone;
    each group keeps its lowest-priority rows. Results therefore do not depend
    on the order in which groups are visited.

    With ``exact_size`` set and the ceilings overshooting it, the retained set
    is trimmed uniformly at random down to ``exact_size`` rows.
    """
    codes = assignment.codes
    n = codes.shape[0]
    sizes = assignment.sizes
    quota = group_retention(sizes, delta)
    priority = _rng(seed, _STREAM_GROUPS).random(n)
    order = np.lexsort((priority, codes))
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    rank = np.arange(n) - starts[codes[order]]
    keep = order[rank < quota[codes[order]]]
    retained = np.sort(keep)
    trimmed_from = None
    if exact_size is not None and exact_size < retained.size:
        trimmed_from = int(retained.size)
        pick = _rng(seed, _STREAM_TRIM).choice(retained.size, size=exact_size, replace=False)
        retained = np.sort(retained[pick])
    counts = np.bincount(codes[retained], minlength=assignment.n_groups)
    per_group = {assignment.labels[c]: int(counts[c]) for c in range(assignment.n_groups)}
    return SamplePlan(PCA_QS, retained, float(delta), int(seed), per_group, trimmed_from)


def srs_sample(n: int, delta: Optional[float] = None, seed: int = 0, size: Optional[int] = None) -> SamplePlan:
    """Uniform without-replacement draw of ``size`` (or ``ceil(delta*n)``) rows."""
    if (delta is None) == (size is None):
        raise ValueError("give exactly one of delta or size")
    if size is None:
        if not 0 < delta <= 1:
            raise ValueError(f"delta must lie in (0,1], got {delta}")
        size = int(_ceil_rate(delta, n))
    if size > n:
        raise ValueError(f"cannot draw {size} rows from {n}")
    if size < 0:
        raise ValueError(f"size must be nonnegative, got {size}")
    retained = np.sort(_rng(seed, _STREAM_SRS).choice(n, size=size, replace=False))
    rate = float(delta) if delta is not None else (size / n if n else 0.0)
    return SamplePlan(SRS, retained.astype(np.int64), rate, int(seed))


def expected_size(assignment: GroupAssignment, delta: float) -> int:
    return int(group_retention(assignment.sizes, delta).sum())


def ceil_rate(delta: float, n: int) -> int:
    return int(_ceil_rate(delta, n))

