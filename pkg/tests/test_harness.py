import math

import numpy as np
import pytest
from scipy import stats

from pcaqs.harness import (
    AGGREGATE_COLUMNS,
    RECORD_COLUMNS,
    RunRecord,
    aggregate,
    convergence_study,
    emit_csv,
    fit_loglog,
    normal_w1_exact,
    read_csv_rows,
    run_benchmark,
    welch_t_test,
)
from pcaqs.ingest import parse_config
from pcaqs.metrics import wasserstein_1d
from pcaqs.synth import GeneratorSpec

SMALL = "gen:block_gaussian:n=600,d=8"


def rec(method, value, r=0, metric="energy"):
    return RunRecord("toy", method, "2", 0.05, r, metric, value, 2, r)


def test_record_count():
    cfg = parse_config({"replications": 3, "metrics": ["energy"], "k": 2, "m": 4})
    run = run_benchmark(cfg, SMALL)
    assert run.ok and len(run.records) == 6
    assert {r.method for r in run.records} == {"PCA-QS", "SRS"}
    assert [r.replicate for r in run.records] == [0, 0, 1, 1, 2, 2]


def test_dynamic_records_carry_resolved_k():
    cfg = parse_config({"replications": 2, "metrics": ["kl"], "k_mode": "dynamic", "variance_threshold": 0.7})
    run = run_benchmark(cfg, "gen:block_gaussian:n=2000,d=50")
    ks = {r.n_components for r in run.records}
    assert len(ks) == 1 and 1 <= ks.pop() <= 12
    assert {r.pc_config for r in run.records} == {"dyn"}


def test_sample_size_with_held_out_split():
    cfg = parse_config({"replications": 2, "metrics": ["label_js"], "k": 2, "m": 5, "test_size": 100,
                        "sample_size": 50})
    run = run_benchmark(cfg, "gen:gmm_binary:n=800,d=3")
    assert len(run.records) == 4


def test_classification_metrics_recorded():
    cfg = parse_config({"replications": 2, "metrics": ["auc", "accuracy"], "k": 2, "m": 5, "test_size": 200,
                        "sample_size": 300})
    run = run_benchmark(cfg, "gen:gmm_binary:n=1500,d=3")
    assert {r.metric for r in run.records} == {"auc", "accuracy"}
    assert all(0 <= r.value <= 1 for r in run.records)


def test_regenerate_changes_data_per_replicate():
    cfg = parse_config({"replications": 2, "metrics": ["energy"], "k": 2, "m": 4, "regenerate": True})
    a = run_benchmark(cfg, SMALL)
    b = run_benchmark(cfg, GeneratorSpec("block_gaussian", n=600, d=8))
    assert [r.value for r in a.records] == [r.value for r in b.records]


def test_failed_replicates_are_skipped():
    # classification without a held-out split fails in every replicate
    cfg = parse_config({"replications": 2, "metrics": ["auc"], "k": 1, "m": 2})
    with pytest.raises(RuntimeError):
        run_benchmark(cfg, "gen:gmm_binary:n=300,d=2")


def test_aggregate_examples():
    rows = aggregate([rec("SRS", 1.0, 0), rec("SRS", 3.0, 1)])
    assert len(rows) == 1
    assert rows[0].mean == 2.0 and rows[0].std == pytest.approx(math.sqrt(2)) and rows[0].count == 2
    single = aggregate([rec("SRS", 4.0)])[0]
    assert single.std == 0.0 and single.count == 1


def test_aggregate_matches_single_pass_oracle():
    rng = np.random.default_rng(0)
    records = [rec(m, float(rng.normal()), r, metric) for m in ("PCA-QS", "SRS")
               for metric in ("kl", "mmd") for r in range(17)]
    for row in aggregate(records):
        vals = [x.value for x in records if (x.method, x.metric) == (row.method, row.metric)]
        n, mean, m2 = 0, 0.0, 0.0
        for v in vals:  # Welford
            n += 1
            delta = v - mean
            mean += delta / n
            m2 += delta * (v - mean)
        assert row.mean == pytest.approx(mean, abs=1e-12)
        assert row.std == pytest.approx(math.sqrt(m2 / (n - 1)), abs=1e-12)
        if row.method == "SRS":
            assert row.p_value is None
        else:
            other = [x.value for x in records if (x.method, x.metric) == ("SRS", row.metric)]
            assert row.p_value == pytest.approx(stats.ttest_ind(vals, other, equal_var=False).pvalue, rel=1e-10)


def test_welch():
    a = np.array([1.0, 2.0, 3.0, 5.0])
    assert welch_t_test(a, a) == 1.0
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = rng.normal(size=rng.integers(2, 30)), rng.normal(0.5, 2, size=rng.integers(2, 30))
        p = welch_t_test(x, y)
        assert 0 <= p <= 1
        assert p == pytest.approx(stats.ttest_ind(x, y, equal_var=False).pvalue, rel=1e-10)
        assert p == pytest.approx(welch_t_test(y, x), rel=1e-12)
    lo, hi = rng.normal(0, 0.01, 100), rng.normal(10, 0.01, 100)
    assert welch_t_test(lo, hi) < 1e-12
    with pytest.raises(ValueError):
        welch_t_test([1.0], [1.0, 2.0])


def test_normal_w1_exact_against_large_reference():
    x = np.random.default_rng(2).normal(size=50)
    ref = np.random.default_rng(3).normal(size=2_000_000)
    assert normal_w1_exact(x) == pytest.approx(wasserstein_1d(x, ref), abs=3e-3)


def test_fit_loglog_recovers_power_law():
    n = np.array([10, 100, 1000, 10000])
    slope, se, r2 = fit_loglog(n, 3.0 * n**-0.5)
    assert slope == pytest.approx(-0.5) and r2 == pytest.approx(1.0) and se < 1e-12


def test_convergence_constant_control():
    def constant(n, rng):
        return 0.25

    res = convergence_study(constant, n_grid=(10, 20, 40, 80), reps=20)
    assert abs(res.slope) < 1e-12


def test_convergence_drops_zero_errors():
    def sometimes_zero(n, rng):
        return 0.0 if rng.random() < 0.2 else n**-0.5

    with pytest.warns(RuntimeWarning):
        res = convergence_study(sometimes_zero, n_grid=(10, 20, 40, 80), reps=20, seed=1)
    assert res.dropped > 0 and res.slope == pytest.approx(-0.5)


def test_convergence_argument_checks():
    with pytest.raises(ValueError):
        convergence_study("normal_quantile", n_grid=(10, 20, 30), reps=20)
    with pytest.raises(ValueError):
        convergence_study("normal_quantile", reps=5)
    with pytest.raises(ValueError):
        convergence_study("bogus")


def test_small_w1_study_slope():
    res = convergence_study("w1_decay", n_grid=(100, 300, 1000, 3000), reps=40)
    assert -0.65 <= res.slope <= -0.35


def test_emit_csv_header_only(tmp_path):
    path = emit_csv([], tmp_path / "agg.csv")
    assert path.read_text() == ",".join(AGGREGATE_COLUMNS) + "\n"


def test_emit_csv_sorted_and_deterministic(tmp_path):
    records = [rec("SRS", 0.123456789, 1), rec("PCA-QS", 2.0, 0), rec("SRS", 1e-9, 0)]
    a = emit_csv(records, tmp_path / "a.csv").read_bytes()
    b = emit_csv(records[::-1], tmp_path / "b.csv").read_bytes()
    assert a == b
    rows = read_csv_rows(tmp_path / "a.csv")
    assert list(rows[0]) == list(RECORD_COLUMNS)
    assert [(r["method"], r["replicate"]) for r in rows] == [("PCA-QS", "0"), ("SRS", "0"), ("SRS", "1")]
    assert rows[2]["value"] == "0.123457" and rows[1]["value"] == "1e-09"
