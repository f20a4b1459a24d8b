"""Command line entry point: ``pcaqs {sample,bench,converge,gen}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (
    aggregate,
    convergence_study,
    emit_csv,
    run_benchmark,
)
from .ingest import ConfigError, DataError, load_csv, parse_config, standardize, write_csv
from .pca import default_cap, default_m, fit_pca, project, select_k_variance
from .sampler import pcaqs_sample
from .strata import stratify
from .synth import FAMILIES, GeneratorSpec, generate, write_sidecar

log = logging.getLogger("pcaqs")


def _cmd_sample(args) -> int:
    cfg = parse_config(args.config) if args.config else parse_config()
    data = load_csv(args.input, args.label_column)
    data, _ = standardize(data, allow_constant=args.allow_constant)
    if cfg.k_mode == "fixed":
        model = fit_pca(data, min(cfg.k, min(data.n - 1, data.d)))
    else:
        full = fit_pca(data)
        model = full.truncate(min(full.k, select_k_variance(full.ratios_full, cfg.variance_threshold, default_cap(data.d))))
    m = cfg.m if cfg.m is not None else default_m(model.k)
    _, groups = stratify(project(model, data), m)
    exact = args.exact_size if args.exact_size is not None else cfg.sample_size
    delta = cfg.delta if exact is None else min(1.0, exact / data.n)
    plan = pcaqs_sample(groups, delta, cfg.seed, exact_size=exact)
    plan.to_csv(args.out)
    if args.groups:
        groups.to_csv(args.groups)
    if args.model:
        Path(args.model).write_text(model.to_json(), encoding="utf-8")
    log.info("k=%d m=%d groups=%d retained=%d of %d", model.k, m, groups.n_groups, plan.size, data.n)
    return 0


def _cmd_bench(args) -> int:
    cfg = parse_config(args.config) if args.config else parse_config()
    run = run_benchmark(cfg, args.data, dataset=args.dataset, label_column=args.label_column,
                        allow_constant=args.allow_constant)
    emit_csv(run.records, args.out)
    if args.summary:
        emit_csv(aggregate(run.records), args.summary)
    if run.failures:
        log.error("%d of %d replicates failed", len(run.failures), cfg.replications)
        return 1
    return 0


def _cmd_converge(args) -> int:
    grid = [int(v) for v in args.n_grid.split(",")] if args.n_grid else None
    rows, points = [], []
    for study in args.study:
        kw = {"reps": args.reps, "seed": args.seed}
        if grid:
            kw["n_grid"] = grid
        res = convergence_study(study, **kw)
        rows.append({"study": res.study, "slope": res.slope, "stderr": res.stderr, "r2": res.r2,
                     "n_points": len(res.n_grid), "reps": args.reps, "dropped": res.dropped})
        for n, mean, med in zip(res.n_grid, res.mean_error, res.median_error):
            points.append({"study": res.study, "n": n, "mean_error": mean, "median_error": med})
        log.info("%s: slope %.4f +/- %.4f (R^2 %.3f)", res.study, res.slope, res.stderr, res.r2)
    emit_csv(rows, args.out, ("study", "slope", "stderr", "r2", "n_points", "reps", "dropped"))
    if args.points:
        emit_csv(points, args.points, ("study", "n", "mean_error", "median_error"))
    return 0


def _cmd_gen(args) -> int:
    params = json.loads(args.params) if args.params else {}
    if args.nonlinear:
        params["nonlinear"] = True
    spec = GeneratorSpec(args.family, args.n, args.d, args.seed, params)
    data = generate(spec)
    write_csv(data, args.out)
    write_sidecar(spec, data, args.sidecar or str(args.out) + ".json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcaqs", description="PCA-guided quantile sampling toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw a PCA-QS subsample of a CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True, help="CSV of retained row indices")
    s.add_argument("--label-column")
    s.add_argument("--groups", help="optional CSV of (row_index, key)")
    s.add_argument("--model", help="optional PCA model JSON")
    s.add_argument("--exact-size", type=int, help="set delta = size/n and trim the ceiling overshoot to this many rows")
    s.add_argument("--allow-constant", action="store_true")
    s.set_defaults(func=_cmd_sample)

    b = sub.add_parser("bench", help="replicated PCA-QS vs SRS comparison")
    b.add_argument("--config")
    b.add_argument("--data", required=True, help="gen:<family>[:k=v,...] or a CSV path")
    b.add_argument("--out", required=True)
    b.add_argument("--summary", help="optional aggregate CSV")
    b.add_argument("--dataset", help="dataset name written into every row")
    b.add_argument("--label-column")
    b.add_argument("--allow-constant", action="store_true")
    b.set_defaults(func=_cmd_bench)

    c = sub.add_parser("converge", help="empirical convergence-rate study")
    c.add_argument("--study", action="append", choices=("normal_quantile", "w1_decay", "kl_decay"), required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--points", help="optional per-n error CSV")
    c.add_argument("--n-grid", help="comma-separated sample sizes")
    c.add_argument("--reps", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_cmd_converge)

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int, default=20_000)
    g.add_argument("--d", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--nonlinear", action="store_true")
    g.add_argument("--params", help="JSON object of family parameters")
    g.add_argument("--sidecar", help="JSON sidecar path (default: <out>.json)")
    g.set_defaults(func=_cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(over="ignore")
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError, RuntimeError, OSError) as exc:
        print(f"pcaqs: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
