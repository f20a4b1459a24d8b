"""Synthetic dataset families.

All generators draw standard normals from numpy's ``Generator`` (ziggurat) and
are bit-reproducible for a fixed seed and numpy version.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .ingest import DataMatrix, standardize

FAMILIES = ("block_gaussian", "gmm_binary", "structured_classification")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n: int = 20_000
    d: int = 20
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 2 or self.d < 1:
            raise ValueError(f"need n >= 2 and d >= 1, got n={self.n}, d={self.d}")

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return GeneratorSpec(self.family, self.n, self.d, seed, dict(self.params))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)


def block_covariance(d: int, block_size: int, rho: float) -> np.ndarray:
    C = np.eye(d)
    for start in range(0, d, block_size):
        stop = min(d, start + block_size)
        C[start:stop, start:stop] = rho
        np.fill_diagonal(C[start:stop, start:stop], 1.0)
    return C


def gen_block_gaussian(n: int, d: int, block_size: int = 5, rho: float = 0.7, seed: int = 0) -> DataMatrix:
    """Zero-mean Gaussian rows; unit variances, correlation ``rho`` inside
    each consecutive block of ``block_size`` columns (last block may be short;
    a block wider than d is one block)."""
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    block_size = min(block_size, d)
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if block_size > 1 and rho <= -1.0 / (block_size - 1):
        raise ValueError(f"rho={rho} makes the block covariance indefinite for block_size={block_size}")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, d))
    X = np.empty_like(Z)
    for start in range(0, d, block_size):
        stop = min(d, start + block_size)
        b = stop - start
        L = np.linalg.cholesky(np.full((b, b), rho) + (1 - rho) * np.eye(b))
        X[:, start:stop] = Z[:, start:stop] @ L.T
    meta = {"family": "block_gaussian", "n": n, "d": d, "block_size": block_size, "rho": rho, "seed": seed}
    return DataMatrix(X, None, tuple(f"x{j}" for j in range(d)), meta)


def nonlinear_features(X: np.ndarray) -> np.ndarray:
    """Append all pairwise products x_i x_j (i < j) and sin(x_i)."""
    d = X.shape[1]
    pairs = list(combinations(range(d), 2))
    if pairs:
        i, j = np.array(pairs).T
        inter = X[:, i] * X[:, j]
    else:
        inter = np.empty((X.shape[0], 0))
    return np.hstack([X, inter, np.sin(X)])


def gen_gmm_binary(
    n: int,
    d: int,
    prior1: float = 0.1,
    shift: float = 0.5,
    var1: float = 1.2,
    seed: int = 0,
    nonlinear: bool = False,
) -> DataMatrix:
    """Two-class Gaussian mixture with Bernoulli(prior1) labels.

    Class 0 ~ N(0, I), class 1 ~ N(shift * 1, var1 * I). With ``nonlinear``
    the width grows to d + d(d-1)/2 + d.
    """
    if not 0 < prior1 < 1:
        raise ValueError(f"prior1 must lie in (0,1), got {prior1}")
    if var1 <= 0:
        raise ValueError(f"var1 must be > 0, got {var1}")
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < prior1).astype(np.int64)
    X = rng.standard_normal((n, d))
    X[y == 1] = X[y == 1] * np.sqrt(var1) + shift
    names = [f"x{j}" for j in range(d)]
    if nonlinear:
        X = nonlinear_features(X)
        names += [f"x{i}*x{j}" for i, j in combinations(range(d), 2)]
        names += [f"sin(x{j})" for j in range(d)]
    meta = {
        "family": "gmm_binary", "n": n, "d": d, "prior1": prior1, "shift": shift,
        "var1": var1, "seed": seed, "nonlinear": nonlinear,
    }
    return DataMatrix(X, y, tuple(names), meta)


N_INFORMATIVE = 20
N_REDUNDANT = 5
N_REPEATED = 2
N_NOISE = 3


def gen_structured_classification(
    n: int, seed: int = 0, prior1: float = 0.1, separation: float = 1.5, standardize_output: bool = True
) -> DataMatrix:
    """30-feature imbalanced classification data.

    20 informative columns (class means 0 and ``separation`` * ones, identity
    covariance, so the centroid gap is ``separation * sqrt(20)``), 5 random
    linear combinations of them (N(0,1) weights), exact copies of informative
    columns 0 and 1, and 3 independent N(0,1) noise columns.
    """
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < prior1).astype(np.int64)
    inf = rng.standard_normal((n, N_INFORMATIVE))
    inf[y == 1] += separation
    weights = rng.standard_normal((N_INFORMATIVE, N_REDUNDANT))
    red = inf @ weights
    rep = inf[:, :N_REPEATED].copy()
    noise = rng.standard_normal((n, N_NOISE))
    X = np.hstack([inf, red, rep, noise])
    names = (
        [f"inf{j}" for j in range(N_INFORMATIVE)]
        + [f"red{j}" for j in range(N_REDUNDANT)]
        + [f"rep{j}" for j in range(N_REPEATED)]
        + [f"noise{j}" for j in range(N_NOISE)]
    )
    meta = {
        "family": "structured_classification", "n": n, "seed": seed, "prior1": prior1,
        "separation": separation, "redundant_weights": weights.tolist(),
        "repeated_sources": list(range(N_REPEATED)), "mu0": 0.0, "mu1_direction": "ones",
    }
    data = DataMatrix(X, y, tuple(names), meta)
    if standardize_output:
        data, _ = standardize(data)
    return data


def generate(spec: GeneratorSpec) -> DataMatrix:
    p = dict(spec.params)
    if spec.family == "block_gaussian":
        return gen_block_gaussian(spec.n, spec.d, p.get("block_size", 5), p.get("rho", 0.7), spec.seed)
    if spec.family == "gmm_binary":
        return gen_gmm_binary(
            spec.n, spec.d, p.get("prior1", 0.1), p.get("shift", 0.5), p.get("var1", 1.2),
            spec.seed, bool(p.get("nonlinear", False)),
        )
    return gen_structured_classification(
        spec.n, spec.seed, p.get("prior1", 0.1), p.get("separation", 1.5), bool(p.get("standardize", True))
    )


def parse_source(text: str) -> GeneratorSpec:
    """Parse ``gen:<family>[:key=value,...]``, e.g.
    ``gen:block_gaussian:n=20000,d=20,block_size=5,rho=0.7``."""
    if not text.startswith("gen:"):
        raise ValueError(f"generator source must start with 'gen:', got {text!r}")
    body = text[4:]
    family, _, rest = body.partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"bad generator option {item!r}; expected key=value")
        kw[key.strip()] = _literal(val.strip())
    top = {k: int(kw.pop(k)) for k in ("n", "d", "seed") if k in kw}
    return GeneratorSpec(family, params=kw, **top)


def _literal(val: str):
    low = val.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    return val


def write_sidecar(spec: GeneratorSpec, data: DataMatrix, path) -> None:
    doc = {"spec": json.loads(spec.to_json()), "meta": data.meta, "shape": [data.n, data.d]}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
