from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcaqs.ingest import standardize
from pcaqs.pca import SelectionWarning, default_cap, fit_pca, project, select_k_variance
from pcaqs.sampler import PCA_QS, SRS, expected_size, group_retention, pcaqs_sample, srs_sample
from pcaqs.strata import GroupAssignment, composite_keys, stratify
from pcaqs.synth import gen_gmm_binary


def oracle(n_group, p, q):
    # ceil(p/q * N) with integers only
    return min(-(-p * n_group // q), n_group)


def test_worked_example():
    assert group_retention(400, 0.05) == 20


@pytest.mark.parametrize("n, delta, want", [(3, 0.05, 1), (10, 1.0, 10), (0, 0.3, 0), (100, 0.07, 7), (1, 1e-9, 1)])
def test_retention_cases(n, delta, want):
    assert group_retention(n, delta) == want


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10**4), st.data())
def test_retention_matches_integer_oracle(n, q, data):
    p = data.draw(st.integers(1, q))
    assert group_retention(n, p / q) == oracle(n, p, q)


def test_retention_vectorized():
    sizes = np.array([0, 1, 5, 400])
    np.testing.assert_array_equal(group_retention(sizes, 0.05), [0, 1, 1, 20])


def test_retention_rejects_bad_delta():
    with pytest.raises(ValueError):
        group_retention(10, 0.0)


def _blocks(n_groups, size):
    return composite_keys(np.repeat(np.arange(n_groups), size))


def test_worked_example_25_groups():
    ga = _blocks(25, 400)
    plan = pcaqs_sample(ga, 0.05, seed=1)
    assert plan.size == 500
    assert set(plan.per_group_counts.values()) == {20}
    assert plan.method == PCA_QS


def test_full_retention():
    ga = composite_keys(np.random.default_rng(0).integers(0, 4, size=(57, 2)))
    np.testing.assert_array_equal(pcaqs_sample(ga, 1.0, 3).retained, np.arange(57))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.integers(1, 6), st.floats(0.01, 1.0), st.integers(0, 2**32))
def test_size_law_and_coverage(n, n_codes, delta, seed):
    ga = composite_keys(np.random.default_rng(seed).integers(0, n_codes, size=n))
    plan = pcaqs_sample(ga, delta, seed)
    r = plan.retained
    assert np.all(np.diff(r) > 0) and r.min() >= 0 and r.max() < n
    assert plan.size == expected_size(ga, delta) == sum(group_retention(s, delta) for s in ga.sizes)
    assert plan.size >= int(np.ceil(Fraction(delta) * n - Fraction(1, 10**9)))
    # every nonempty group contributes
    assert all(v >= 1 for v in plan.per_group_counts.values())
    codes_in = np.bincount(ga.codes[r], minlength=ga.n_groups)
    np.testing.assert_array_equal(codes_in, group_retention(ga.sizes, delta))


def test_deterministic_and_order_independent():
    rng = np.random.default_rng(4)
    bins = rng.integers(0, 5, size=(300, 2))
    a = pcaqs_sample(composite_keys(bins), 0.1, 42)
    b = pcaqs_sample(composite_keys(bins), 0.1, 42)
    np.testing.assert_array_equal(a.retained, b.retained)
    # relabel groups in a different order: same rows must be chosen
    ga = composite_keys(bins)
    perm = rng.permutation(ga.n_groups)
    relabeled = GroupAssignment(perm[ga.codes], tuple(np.array(ga.labels, dtype=object)[np.argsort(perm)]))
    c = pcaqs_sample(relabeled, 0.1, 42)
    np.testing.assert_array_equal(a.retained, c.retained)


def test_single_group_matches_srs_inclusion():
    n, delta, seeds = 20, 0.25, 2000
    ga = composite_keys(np.zeros(n, dtype=int))
    size = 5
    hits = np.zeros(n)
    for s in range(seeds):
        plan = pcaqs_sample(ga, delta, s)
        assert plan.size == size
        hits[plan.retained] += 1
    p = size / n
    sigma = np.sqrt(p * (1 - p) / seeds)
    assert np.all(np.abs(hits / seeds - p) <= 3 * sigma + 1e-12)


def test_exact_size_trims():
    ga = composite_keys(np.repeat(np.arange(30), 7))
    plan = pcaqs_sample(ga, 0.05, 0, exact_size=20)
    assert plan.size == 20 and plan.trimmed_from == 30


def test_srs_basics():
    np.testing.assert_array_equal(srs_sample(10, delta=1.0, seed=0).retained, np.arange(10))
    a = srs_sample(10, size=3, seed=1)
    b = srs_sample(10, size=3, seed=1)
    np.testing.assert_array_equal(a.retained, b.retained)
    assert a.method == SRS and a.size == 3
    with pytest.raises(ValueError):
        srs_sample(10, size=11, seed=0)
    with pytest.raises(ValueError):
        srs_sample(10, seed=0)


def test_srs_inclusion_probability():
    n, size, seeds = 10, 3, 10_000
    hits = np.zeros(n)
    for s in range(seeds):
        hits[srs_sample(n, size=size, seed=s).retained] += 1
    p = size / n
    assert np.all(np.abs(hits / seeds - p) <= 3 * np.sqrt(p * (1 - p) / seeds))


def test_label_proportion_preserved():
    # two-class GMM, delta 0.05, k chosen by the 70% variance rule
    data, _ = standardize(gen_gmm_binary(10_000, 10, seed=0))
    full = fit_pca(data)
    with pytest.warns(SelectionWarning):
        k = select_k_variance(full.ratios_full, 0.70, default_cap(data.d))
    _, ga = stratify(project(full.truncate(k), data), 10)
    fracs = [data.labels[pcaqs_sample(ga, 0.05, s).retained].mean() for s in range(100)]
    pop = data.labels.mean()
    assert abs(pop - 0.10) < 0.01
    assert abs(np.mean(fracs) - pop) <= 0.02


def test_plan_csv(tmp_path):
    plan = srs_sample(5, size=2, seed=0)
    p = tmp_path / "i.csv"
    plan.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "index" and len(lines) == 3
