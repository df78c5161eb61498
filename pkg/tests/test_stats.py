import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from app.core.exceptions import InsufficientSampleError
from app.experiments.conditions import Condition
from app.experiments.stats import (
    PAIRWISE_PLAN,
    cohens_d,
    compare_groups,
    pairwise_table,
    summarize,
    summary_table,
    t_test_two_sample,
    two_point_sample,
    two_sample_t,
)


# Per-condition mean and SD of final loneliness, four seeds each
PUBLISHED = {
    Condition.BASELINE: (0.717, 0.018),
    Condition.FIXED_POLICY: (0.674, 0.012),
    Condition.LLM_MAPPING: (0.680, 0.007),
    Condition.CLOSED_LOOP: (0.607, 0.020),
    Condition.BLACK_BOX: (0.687, 0.025),
}


@pytest.fixture
def published_finals():
    return {condition: two_point_sample(mean, sd) for condition, (mean, sd) in PUBLISHED.items()}


def test_two_point_sample_reproduces_mean_and_sd():
    sample = two_point_sample(0.607, 0.020)
    assert len(sample) == 4
    assert np.mean(sample) == pytest.approx(0.607)
    assert np.std(sample, ddof=1) == pytest.approx(0.020)
    with pytest.raises(InsufficientSampleError):
        two_point_sample(0.5, 0.1, n=3)


def test_pairwise_rows_match_published_effects(published_finals):
    rows = {(row.group_a, row.group_b): row for row in pairwise_table(published_finals)}
    assert len(rows) == len(PAIRWISE_PLAN)

    vs_mapping = rows[("Closed-Loop", "LLM Mapping")]
    assert vs_mapping.cohens_d == pytest.approx(-4.87, abs=0.01)
    assert vs_mapping.p_value < 0.001
    assert vs_mapping.significance == "***"
    assert vs_mapping.improvement_pct == pytest.approx(10.7, abs=0.05)

    vs_fixed = rows[("Closed-Loop", "Fixed Policy")]
    assert vs_fixed.cohens_d == pytest.approx(-4.06, abs=0.01)
    assert vs_fixed.p_value == pytest.approx(0.0012, abs=0.0002)
    assert vs_fixed.improvement_pct == pytest.approx(9.94, abs=0.01)

    vs_black_box = rows[("Closed-Loop", "Black-box")]
    assert vs_black_box.cohens_d == pytest.approx(-3.53, abs=0.01)
    assert 0.001 < vs_black_box.p_value < 0.01
    assert vs_black_box.improvement_pct == pytest.approx(11.64, abs=0.01)

    black_box_vs_fixed = rows[("Black-box", "Fixed Policy")]
    assert black_box_vs_fixed.cohens_d == pytest.approx(0.66, abs=0.01)
    assert black_box_vs_fixed.p_value > 0.05
    assert black_box_vs_fixed.significance == ""
    assert black_box_vs_fixed.improvement_pct is None


def test_pairwise_matches_scipy():
    rng = np.random.default_rng(1234)
    for case in range(1000):
        a = rng.normal(0.6, 0.05, size=int(rng.integers(2, 9)))
        b = rng.normal(0.62, 0.05, size=int(rng.integers(2, 9)))
        equal_var = case % 2 == 0
        ours = two_sample_t(a, b, equal_var=equal_var)
        reference = scipy_stats.ttest_ind(a, b, equal_var=equal_var)
        assert ours.t_statistic == pytest.approx(reference.statistic, rel=1e-10)
        assert ours.p_value == pytest.approx(reference.pvalue, rel=1e-10, abs=1e-12)


def test_effect_size_is_antisymmetric():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b = rng.random(4), rng.random(5)
        assert cohens_d(a, b) == pytest.approx(-cohens_d(b, a))
        assert t_test_two_sample(a, b) == pytest.approx(t_test_two_sample(b, a))


def test_shift_and_scale_invariance():
    rng = np.random.default_rng(8)
    for _ in range(200):
        a, b = rng.random(4), rng.random(4)
        shift, scale = float(rng.uniform(-5, 5)), float(rng.uniform(0.1, 10))
        d = cohens_d(a, b)
        p = t_test_two_sample(a, b)
        assert cohens_d(a + shift, b + shift) == pytest.approx(d, rel=1e-6)
        assert cohens_d(a * scale, b * scale) == pytest.approx(d, rel=1e-9)
        assert t_test_two_sample(a * scale, b * scale) == pytest.approx(p, rel=1e-9)


def test_identical_groups():
    assert cohens_d([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert t_test_two_sample([0.5, 0.5], [0.5, 0.5]) == 1.0
    assert t_test_two_sample([0.2, 0.4, 0.6], [0.2, 0.4, 0.6]) == pytest.approx(1.0)


def test_constant_but_different_groups():
    assert cohens_d([0.4, 0.4], [0.6, 0.6]) == -math.inf
    assert t_test_two_sample([0.4, 0.4], [0.6, 0.6]) == 0.0


def test_small_groups_are_refused():
    with pytest.raises(InsufficientSampleError):
        cohens_d([0.5], [0.4, 0.6])
    with pytest.raises(InsufficientSampleError):
        t_test_two_sample([0.5, 0.6], [])
    with pytest.raises(InsufficientSampleError):
        summarize([])


def test_summary_of_one_seed_has_no_sd():
    summary = summarize([0.61])
    assert (summary.n, summary.mean, summary.sd, summary.min, summary.max) == (1, 0.61, None, 0.61, 0.61)


def test_summary_table_in_condition_order(published_finals):
    table = summary_table(published_finals)
    assert list(table) == [c.value for c in Condition]
    assert table["closed"].mean == pytest.approx(0.607)
    assert table["closed"].sd == pytest.approx(0.020)


def test_pairwise_table_skips_thin_groups():
    finals = {
        Condition.CLOSED_LOOP: [0.60, 0.61, 0.62],
        Condition.FIXED_POLICY: [0.67, 0.68],
        Condition.LLM_MAPPING: [0.68],
    }
    rows = pairwise_table(finals)
    assert [(r.group_a, r.group_b) for r in rows] == [("Closed-Loop", "Fixed Policy")]
    assert rows[0].n_per_group == 2


def test_welch_and_pooled_agree_on_balanced_equal_spread():
    a, b = [0.60, 0.62, 0.64, 0.66], [0.65, 0.67, 0.69, 0.71]
    pooled = two_sample_t(a, b, equal_var=True)
    welch = two_sample_t(a, b, equal_var=False)
    assert welch.t_statistic == pytest.approx(pooled.t_statistic)
    assert welch.df == pytest.approx(6.0)
    assert compare_groups("A", a, "B", b, equal_var=False).equal_var is False
