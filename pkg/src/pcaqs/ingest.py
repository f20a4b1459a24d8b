"""CSV ingestion, standardization and run configuration."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

METRIC_NAMES = ("js", "kl", "energy", "mmd", "mahalanobis", "pairwise_dd", "w1", "label_js")
CLASSIFICATION_NAMES = ("accuracy", "auc", "f1", "tpr", "tnr", "fpr", "fnr", "threshold")
DEFAULT_METRICS = ("js", "kl", "energy", "mmd", "mahalanobis", "pairwise_dd")


class DataError(ValueError):
    """Raised when input data violates the DataMatrix invariants."""


class ConfigError(ValueError):
    """Raised for malformed or out-of-range run configuration."""


@dataclass(frozen=True, eq=False)
class DataMatrix:
    values: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {values.shape}")
        n, d = values.shape
        if n < 1 or d < 1:
            raise DataError(f"need n >= 1 and d >= 1, got {n}x{d}")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {r}, column {c}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise DataError(f"labels length {labels.shape} does not match n={n}")
            if not np.all((labels == 0) | (labels == 1)):
                raise DataError("labels must be 0 or 1")
            labels = labels.astype(np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != d:
                raise DataError(f"{len(names)} feature names for {d} columns")
            object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def take(self, rows) -> "DataMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        labels = None if self.labels is None else self.labels[rows]
        return DataMatrix(self.values[rows], labels, self.feature_names, dict(self.meta))


@dataclass(frozen=True, eq=False)
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.means.shape[0]:
            raise DataError(f"expected {self.means.shape[0]} columns, got {values.shape[-1]}")
        return (values - self.means) / self.stds

    def inverse_transform(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.stds + self.means


def load_csv(path, label_column: Optional[str] = None) -> DataMatrix:
    """Read a headed, comma-delimited numeric CSV.

    Rows keep file order. If ``label_column`` is given, that column is removed
    from the feature block and must contain only the literals ``0`` and ``1``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise DataError(f"{path}: label column {label_column!r} not in header")
            label_idx = header.index(label_column)
        rows, labels = [], []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            row = []
            for col, cell in enumerate(raw):
                cell = cell.strip()
                if col == label_idx:
                    if cell not in ("0", "1"):
                        raise DataError(
                            f"{path}:{lineno}: label {header[col]!r} must be 0 or 1, got {cell!r}"
                        )
                    labels.append(int(cell))
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column {header[col]!r}: cannot parse {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: column {header[col]!r}: non-finite {cell!r}")
                row.append(v)
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    names = [h for i, h in enumerate(header) if i != label_idx]
    if not names:
        raise DataError(f"{path}: no feature columns")
    return DataMatrix(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64) if label_idx is not None else None,
        tuple(names),
    )


def write_csv(data: DataMatrix, path, label_column: str = "label") -> None:
    names = data.feature_names or tuple(f"x{j}" for j in range(data.d))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + ([label_column] if data.labels is not None else []))
        for i in range(data.n):
            row = [repr(float(v)) for v in data.values[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            w.writerow(row)


def standardize(data: DataMatrix, allow_constant: bool = False) -> tuple[DataMatrix, Scaler]:
    """Center each column and scale it to unit sample (n-1) standard deviation.

    Constant columns raise ``DataError`` unless ``allow_constant`` is set, in
    which case their std is taken as 1 and they are only centered.
    """
    if data.n < 2:
        raise DataError("standardize needs at least 2 rows")
    means = data.values.mean(axis=0)
    stds = data.values.std(axis=0, ddof=1)
    const = ~(stds > 0)
    if np.any(const):
        if not allow_constant:
            cols = np.flatnonzero(const).tolist()
            raise DataError(f"constant column(s) {cols}; pass allow_constant to pass them through")
        stds = np.where(const, 1.0, stds)
    scaler = Scaler(means, stds)
    out = DataMatrix(scaler.transform(data.values), data.labels, data.feature_names, dict(data.meta))
    return out, scaler


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings.

    ``m=None`` means "use the default rule" ``max(k, 15)`` once k is known.
    ``sample_size`` (optional) overrides ``delta`` with ``sample_size / n_train``
    and trims the stratified draw to exactly that many rows.
    """

    k_mode: str = "dynamic"
    k: Optional[int] = None
    variance_threshold: float = 0.70
    m: Optional[int] = None
    delta: float = 0.05
    replications: int = 10
    seed: int = 0
    metrics: tuple = DEFAULT_METRICS
    test_size: int = 0
    sample_size: Optional[int] = None
    regenerate: bool = False
    gamma: float = 1.0
    n_pairs: int = 10_000
    max_points: Optional[int] = None
    bins: int = 20

    def __post_init__(self):
        _validate(self)

    @property
    def pc_label(self) -> str:
        return "dyn" if self.k_mode == "dynamic" else str(self.k)


_INT_FIELDS = ("k", "m", "replications", "seed", "test_size", "sample_size", "n_pairs", "max_points", "bins")
_KEYS = (
    "delta", "k_mode", "k", "variance_threshold", "m", "replications", "seed", "test_size",
    "metrics", "sample_size", "regenerate", "gamma", "n_pairs", "max_points", "bins",
)


def _validate(cfg: RunConfig) -> None:
    for name in _INT_FIELDS:
        v = getattr(cfg, name)
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, np.integer))):
            raise ConfigError(f"{name} must be an integer, got {v!r}")
    if not (0 < cfg.delta <= 1):
        raise ConfigError(f"delta must lie in (0,1], got {cfg.delta}")
    if cfg.k_mode not in ("fixed", "dynamic"):
        raise ConfigError(f"k_mode must be 'fixed' or 'dynamic', got {cfg.k_mode!r}")
    if cfg.k_mode == "fixed":
        if cfg.k is None or cfg.k < 1:
            raise ConfigError(f"k must be >= 1 when k_mode is 'fixed', got {cfg.k}")
    elif not (0 < cfg.variance_threshold < 1):
        raise ConfigError(f"variance_threshold must lie in (0,1), got {cfg.variance_threshold}")
    if cfg.m is not None and cfg.m < 1:
        raise ConfigError(f"m must be >= 1, got {cfg.m}")
    if cfg.replications < 1:
        raise ConfigError(f"replications must be >= 1, got {cfg.replications}")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError(f"seed must lie in [0, 2^64), got {cfg.seed}")
    if cfg.test_size < 0:
        raise ConfigError(f"test_size must be >= 0, got {cfg.test_size}")
    if cfg.sample_size is not None and cfg.sample_size < 1:
        raise ConfigError(f"sample_size must be >= 1, got {cfg.sample_size}")
    if cfg.gamma <= 0:
        raise ConfigError(f"gamma must be > 0, got {cfg.gamma}")
    if cfg.n_pairs < 1:
        raise ConfigError(f"n_pairs must be >= 1, got {cfg.n_pairs}")
    if cfg.max_points is not None and cfg.max_points < 2:
        raise ConfigError(f"max_points must be >= 2, got {cfg.max_points}")
    if cfg.bins < 1:
        raise ConfigError(f"bins must be >= 1, got {cfg.bins}")
    known = set(METRIC_NAMES) | set(CLASSIFICATION_NAMES)
    bad = [m for m in cfg.metrics if m not in known]
    if bad:
        raise ConfigError(f"unknown metric name(s) {bad}; known: {sorted(known)}")


def parse_config(source=None, **overrides) -> RunConfig:
    """Build a RunConfig from a JSON file path, JSON text, or a dict.

    ``PCAQS_SEED`` in the environment overrides the seed.
    """
    if source is None:
        doc = {}
    elif isinstance(source, dict):
        doc = dict(source)
    else:
        text = str(source)
        if not text.lstrip().startswith("{") and Path(text).is_file():
            text = Path(text).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    doc.update(overrides)
    unknown = sorted(set(doc) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {unknown}")
    if "metrics" in doc:
        if isinstance(doc["metrics"], str) or not isinstance(doc["metrics"], Sequence):
            raise ConfigError("metrics must be an array of names")
        doc["metrics"] = tuple(doc["metrics"])
    if "k" in doc and "k_mode" not in doc and doc["k"] is not None:
        doc["k_mode"] = "fixed"
    env_seed = os.environ.get("PCAQS_SEED")
    if env_seed not in (None, ""):
        try:
            doc["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"PCAQS_SEED must be an integer, got {env_seed!r}") from None
    for name in ("delta", "variance_threshold", "gamma"):
        if name in doc:
            if isinstance(doc[name], bool) or not isinstance(doc[name], (int, float)):
                raise ConfigError(f"{name} must be a number, got {doc[name]!r}")
            doc[name] = float(doc[name])
    return RunConfig(**doc)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {k: getattr(cfg, k) for k in _KEYS}
    out["metrics"] = list(cfg.metrics)
    return out


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **changes)
