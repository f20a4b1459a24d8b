"""Replicated PCA-QS versus SRS experiments, aggregation and rate studies."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from . import metrics as M
from .downstream import SingleClassError, evaluate
from .ingest import CLASSIFICATION_NAMES, DataMatrix, RunConfig, load_csv, standardize
from .pca import default_cap, default_m, fit_pca, project, select_k_variance
from .sampler import PCA_QS, SRS, ceil_rate, pcaqs_sample, srs_sample
from .strata import stratify
from .synth import GeneratorSpec, generate, parse_source

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("dataset", "method", "pc_config", "delta", "replicate", "metric", "value", "n_components", "seed")
AGGREGATE_COLUMNS = ("dataset", "method", "pc_config", "delta", "metric", "mean", "std", "count", "p_value")


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    method: str
    pc_config: str
    delta: float
    replicate: int
    metric: str
    value: float
    n_components: int
    seed: int

    def row(self) -> dict:
        return {c: getattr(self, c) for c in RECORD_COLUMNS}


@dataclass(frozen=True)
class AggregateRow:
    dataset: str
    method: str
    pc_config: str
    delta: float
    metric: str
    mean: float
    std: float
    count: int
    p_value: Optional[float] = None

    def row(self) -> dict:
        return {c: getattr(self, c) for c in AGGREGATE_COLUMNS}


@dataclass
class BenchmarkRun:
    records: list
    failures: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures and bool(self.records)


# ---------------------------------------------------------------- benchmark


def _load_source(source, label_column, allow_constant):
    """Returns (name, base DataMatrix, GeneratorSpec or None)."""
    if isinstance(source, GeneratorSpec):
        spec = source
    elif isinstance(source, DataMatrix):
        return "data", source, None
    elif isinstance(source, str) and source.startswith("gen:"):
        spec = parse_source(source)
    else:
        path = Path(source)
        return path.stem, load_csv(path, label_column), None
    return spec.family, generate(spec), spec


class _Replicate:
    """Everything one replicate computes, in a fixed order."""

    def __init__(self, cfg: RunConfig, data: DataMatrix, ref: Optional[M.ReferenceSet], r: int, name: str):
        self.cfg, self.data, self.r, self.name = cfg, data, r, name
        self.seed = cfg.seed + r
        self.ref = ref if ref is not None else M.ReferenceSet(data.values, cfg.gamma, cfg.bins)

    def run(self) -> list:
        cfg, data = self.cfg, self.data
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0x7E57]))
        n = data.n
        if cfg.test_size:
            if cfg.test_size >= n - 1:
                raise ValueError(f"test_size {cfg.test_size} leaves no training rows (n={n})")
            test = np.sort(rng.choice(n, size=cfg.test_size, replace=False))
            train = np.setdiff1d(np.arange(n), test)
        else:
            test = np.empty(0, dtype=np.int64)
            train = np.arange(n)
        X_train = data.values[train]

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if cfg.k_mode == "fixed":
                model = fit_pca(X_train, min(cfg.k, min(X_train.shape[0] - 1, data.d)))
                if model.k < cfg.k:
                    log.warning("replicate %d: rank %d below requested k=%d", self.r, model.k, cfg.k)
            else:
                full = fit_pca(X_train)
                k = select_k_variance(full.ratios_full, cfg.variance_threshold, default_cap(data.d))
                model = full.truncate(min(k, full.k))
            m = cfg.m if cfg.m is not None else default_m(model.k)
            _, groups = stratify(project(model, X_train), m)
        for w in caught:
            log.info("replicate %d: %s", self.r, w.message)

        if cfg.sample_size is not None:
            delta = min(1.0, cfg.sample_size / train.size)
            qs = pcaqs_sample(groups, delta, self.seed, exact_size=cfg.sample_size)
        else:
            delta = cfg.delta
            qs = pcaqs_sample(groups, delta, self.seed)
        srs = srs_sample(train.size, seed=self.seed, size=qs.size)

        out = []
        for method, plan in ((PCA_QS, qs), (SRS, srs)):
            rows = train[plan.retained]
            for metric, value in self._metrics(rows, test).items():
                out.append(
                    RunRecord(self.name, method, cfg.pc_label, cfg.delta, self.r, metric, float(value), model.k, self.seed)
                )
        return out

    def _metrics(self, rows, test) -> dict:
        cfg, ref, data = self.cfg, self.ref, self.data
        X = data.values
        vals = {}
        for name in cfg.metrics:
            if name == "kl":
                vals[name] = ref.kl(rows)
            elif name == "js":
                vals[name] = ref.js(rows)
            elif name == "energy":
                vals[name] = (
                    ref.energy(rows) if cfg.max_points is None
                    else M.energy_distance(X, X[rows], cfg.max_points, self.seed)
                )
            elif name == "mmd":
                vals[name] = (
                    ref.mmd(rows) if cfg.max_points is None
                    else M.mmd_rbf(X, X[rows], cfg.gamma, cfg.max_points, self.seed)
                )
            elif name == "mahalanobis":
                vals[name] = ref.mahalanobis(rows)
            elif name == "pairwise_dd":
                vals[name] = M.pairwise_distance_difference(X, X[rows], cfg.n_pairs, self.seed)
            elif name == "w1":
                vals[name] = M.feature_w1(X, X[rows])
            elif name == "label_js" and data.labels is not None:
                vals[name] = M.label_js(data.labels, data.labels[rows])
        wanted = [c for c in cfg.metrics if c in CLASSIFICATION_NAMES]
        if wanted:
            if data.labels is None or test.size == 0:
                raise ValueError("classification metrics need labels and test_size > 0")
            rep = evaluate(X[rows], data.labels[rows], X[test], data.labels[test])
            scores = rep.as_metrics()
            vals.update({c: scores[c] for c in wanted if c in scores})
        return vals


def run_benchmark(
    config: RunConfig,
    source: Union[str, Path, GeneratorSpec, DataMatrix],
    dataset: Optional[str] = None,
    label_column: Optional[str] = None,
    allow_constant: bool = False,
) -> BenchmarkRun:
    """Run ``config.replications`` replicates of PCA-QS against size-matched SRS.

    Replicate r uses seed ``config.seed + r``. Generated data are drawn once
    from ``config.seed`` unless ``config.regenerate`` is set, in which case
    each replicate regenerates them from its own seed. Features are
    standardized on all rows; the held-out split (``test_size``) is drawn
    first and both samplers work on the remaining rows. Fidelity metrics
    compare each subset with the full standardized data.

    Failed replicates are logged and skipped.
    """
    name, base, spec = _load_source(str(source) if isinstance(source, Path) else source, label_column, allow_constant)
    name = dataset or name
    regenerate = config.regenerate and spec is not None
    shared = None
    if not regenerate:
        base, _ = standardize(base, allow_constant=allow_constant)
        shared = M.ReferenceSet(base.values, config.gamma, config.bins)

    records, failures = [], {}
    for r in range(config.replications):
        try:
            if regenerate:
                data, _ = standardize(generate(spec.with_seed(config.seed + r)), allow_constant=allow_constant)
            else:
                data = base
            records.extend(_Replicate(config, data, shared, r, name).run())
        except (ValueError, np.linalg.LinAlgError, SingleClassError) as exc:
            log.warning("replicate %d failed: %s", r, exc)
            failures[r] = str(exc)
    if not records:
        raise RuntimeError(f"no replicate succeeded: {failures}")
    meta = {"dataset": name, "replications": config.replications, "failed": sorted(failures)}
    return BenchmarkRun(records, failures, meta)


# ---------------------------------------------------------------- statistics


def welch_t_test(a, b) -> float:
    """Two-sided p-value of Welch's unequal-variance t statistic."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        return 1.0 if diff == 0 else 0.0
    t = diff / math.sqrt(se2)
    df = se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))


def aggregate(records: Sequence[RunRecord], baseline: str = SRS) -> list:
    """Mean, sample std (n-1; 0 for a single value) and count per
    (dataset, method, pc_config, delta, metric), with a Welch p-value against
    the baseline method's matching group."""
    groups: dict = {}
    for rec in records:
        key = (rec.dataset, rec.method, rec.pc_config, rec.delta, rec.metric)
        groups.setdefault(key, []).append(rec.value)
    out = []
    for key in sorted(groups, key=_sort_key):
        vals = np.asarray(groups[key])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        p = None
        base_key = (key[0], baseline) + key[2:]
        if key[1] != baseline and base_key in groups:
            other = groups[base_key]
            if vals.size >= 2 and len(other) >= 2:
                p = welch_t_test(vals, other)
        out.append(AggregateRow(*key, float(vals.mean()), std, int(vals.size), p))
    return out


def _sort_key(key):
    return tuple((0, v) if isinstance(v, (int, float)) else (1, str(v)) for v in key)


# ---------------------------------------------------------------- rate studies


@dataclass(frozen=True)
class ConvergenceResult:
    study: str
    n_grid: tuple
    mean_error: tuple
    median_error: tuple
    slope: float
    stderr: float
    r2: float
    dropped: int = 0


def normal_w1_exact(sample) -> float:
    """W1 between the empirical law of ``sample`` and N(0,1), integrated in
    closed form piecewise using G(x) = x Phi(x) + phi(x), G' = Phi."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    G = lambda t: t * stats.norm.cdf(t) + stats.norm.pdf(t)  # noqa: E731
    # tails: integral of Phi below x_1, of 1 - Phi above x_n
    total = G(x[0]) + G(-x[-1])
    a, b = x[:-1], x[1:]
    c = np.arange(1, n) / n
    q = stats.norm.ppf(c)
    lo = np.minimum(np.maximum(q, a), b)
    # on [a, lo] Phi <= c, on [lo, b] Phi >= c
    below = c * (lo - a) - (G(lo) - G(a))
    above = (G(b) - G(lo)) - c * (b - lo)
    return float(total + np.sum(below + above))


def _quantile_error(levels):
    truth = stats.norm.ppf(levels)

    def err(n, rng):
        x = rng.standard_normal(n)
        return float(np.max(np.abs(np.quantile(x, levels) - truth)))

    return err


def _w1_error(n, rng):
    return normal_w1_exact(rng.standard_normal(n))


def _kl_error_factory(ref_size, bins, eps, rng):
    ref = rng.standard_normal(ref_size)
    edges = np.linspace(ref.min(), ref.max(), bins + 1)
    P = M.Histogram.from_sample(ref, edges)

    def err(n, rng):
        return M.kl_divergence(P, M.Histogram.from_sample(rng.standard_normal(n), edges), eps)

    return err


def fit_loglog(n_grid, errors):
    """Least-squares line through (log n, log error); returns slope, its
    standard error, and R^2."""
    x = np.log(np.asarray(n_grid, dtype=np.float64))
    y = np.log(np.asarray(errors, dtype=np.float64))
    res = stats.linregress(x, y)
    r2 = res.rvalue**2 if np.isfinite(res.rvalue) else (1.0 if np.allclose(y, y[0]) else 0.0)
    return float(res.slope), float(res.stderr), float(r2)


def convergence_study(
    distribution: Union[str, Callable],
    n_grid: Sequence[int] = (1_000, 3_000, 10_000, 30_000, 100_000),
    reps: int = 100,
    seed: int = 0,
    levels: Sequence[float] = (0.5,),
    ref_size: int = 1_000_000,
    bins: int = M.DEFAULT_BINS,
    eps: float = M.DEFAULT_EPS,
) -> ConvergenceResult:
    """Average an error over ``reps`` draws at each n and fit its log-log slope.

    ``distribution`` is one of ``normal_quantile`` (max abs error of the
    empirical quantiles at ``levels`` of N(0,1)), ``w1_decay`` (exact W1 of
    the empirical law to N(0,1)), ``kl_decay`` (binned KL from a
    ``ref_size``-point N(0,1) reference to the sample), or a callable
    ``f(n, rng) -> error``. Exact-zero errors are dropped with a warning.
    """
    n_grid = tuple(int(n) for n in n_grid)
    if len(n_grid) < 4 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing with at least 4 points")
    if reps < 20:
        raise ValueError("reps must be >= 20")
    rng = np.random.default_rng(seed)
    if callable(distribution):
        name, err = getattr(distribution, "__name__", "custom"), distribution
    elif distribution == "normal_quantile":
        name, err = distribution, _quantile_error(np.asarray(levels, dtype=np.float64))
    elif distribution == "w1_decay":
        name, err = distribution, _w1_error
    elif distribution == "kl_decay":
        name, err = distribution, _kl_error_factory(ref_size, bins, eps, rng)
    else:
        raise ValueError(f"unknown study {distribution!r}")
    means, medians, dropped = [], [], 0
    for n in n_grid:
        vals = np.array([err(n, rng) for _ in range(reps)])
        zero = vals == 0
        if zero.any():
            dropped += int(zero.sum())
            warnings.warn(f"{name}: {int(zero.sum())} zero errors at n={n} dropped", RuntimeWarning, stacklevel=2)
            vals = vals[~zero]
        if vals.size == 0:
            raise ValueError(f"{name}: every error at n={n} was zero")
        means.append(float(vals.mean()))
        medians.append(float(np.median(vals)))
    slope, se, r2 = fit_loglog(n_grid, means)
    return ConvergenceResult(name, n_grid, tuple(means), tuple(medians), slope, se, r2, dropped)


# ---------------------------------------------------------------- CSV output


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def emit_csv(rows, path, columns: Optional[Sequence[str]] = None) -> Path:
    """Write rows (RunRecord, AggregateRow, or dicts) sorted by their column
    values, six significant digits for reals. Empty input writes the header."""
    dict_rows = [r.row() if hasattr(r, "row") else dict(r) for r in rows]
    if columns is None:
        if rows and isinstance(rows[0], RunRecord):
            columns = RECORD_COLUMNS
        elif dict_rows:
            columns = tuple(dict_rows[0])
        else:
            columns = AGGREGATE_COLUMNS
    if columns == RECORD_COLUMNS:
        order = ("dataset", "method", "pc_config", "delta", "metric", "replicate")
    else:
        order = tuple(columns)
    dict_rows.sort(key=lambda d: _sort_key(tuple(d.get(c) if d.get(c) is not None else "" for c in order)))
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for d in dict_rows:
            w.writerow([_fmt(d.get(c)) for c in columns])
    return path


def read_csv_rows(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
