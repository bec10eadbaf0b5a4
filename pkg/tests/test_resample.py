import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clinpred.errors import InvalidSpec, KTooLarge, TooFewRows
from clinpred.resample import ResamplingPlan, make_bootstrap, make_kfold, make_loocv, make_nested


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 300), k=st.integers(2, 12), seed=st.integers(0, 2**32))
def test_kfold_assessment_sets_partition_the_rows(n, k, seed):
    if k > n:
        with pytest.raises(KTooLarge):
            make_kfold(n, k, seed)
        return
    folds = make_kfold(n, k, seed)
    held = np.concatenate([f.assessment for f in folds])
    assert np.array_equal(np.sort(held), np.arange(n))
    sizes = [f.assessment.size for f in folds]
    assert max(sizes) - min(sizes) <= 1
    for f in folds:
        assert np.intersect1d(f.analysis, f.assessment).size == 0
        assert f.analysis.size + f.assessment.size == n


def test_bootstrap_out_of_bag_is_complement():
    for pair in make_bootstrap(200, 5, 3):
        assert pair.analysis.size == 200
        assert np.array_equal(np.setdiff1d(np.arange(200), pair.analysis), pair.assessment)


def test_bootstrap_unique_fraction_near_632():
    frac = [np.unique(p.analysis).size / 10_000 for p in make_bootstrap(10_000, 25, 11)]
    assert abs(np.mean(frac) - (1 - np.exp(-1))) < 0.005


def test_loocv():
    pairs = make_loocv(5)
    assert [p.assessment.tolist() for p in pairs] == [[0], [1], [2], [3], [4]]
    with pytest.raises(TooFewRows):
        make_loocv(1)


def test_plan_is_pure_function_of_seed():
    plan = ResamplingPlan("boot", 3, 9)
    a, b = plan.expand(50), plan.expand(50)
    assert all(np.array_equal(x.analysis, y.analysis) for x, y in zip(a, b))
    with pytest.raises(InvalidSpec):
        ResamplingPlan("holdout", 3)


def test_nested_inner_stays_inside_outer_analysis():
    outer, inner = ResamplingPlan("cv", 4, 1), ResamplingPlan("cv", 3, 2)
    for split in make_nested(40, outer, inner):
        universe = set(split.outer.analysis.tolist())
        for p in split.inner:
            assert set(p.analysis.tolist()) <= universe
            assert set(p.assessment.tolist()) <= universe
