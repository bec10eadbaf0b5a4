import itertools
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import gammaincc as scipy_gammaincc

from clinpred.errors import EmptyExpected, MergedGroupWarning, SingleClass, TargetUnachievable
from clinpred.evaluation import (
    ConfusionMatrix,
    apply_recalibrator,
    auc,
    brier,
    calibration_intercept,
    calibration_report,
    calibration_slope,
    chi2_sf,
    confusion_at,
    discrimination_report,
    fit_recalibrator,
    gammaincc,
    grouped_eci,
    hosmer_lemeshow,
    optimal_cutoff,
    overfit_gap,
    pava,
    qq_points,
    regression_report,
    roc_curve,
)
from clinpred.evaluation.calibration import equal_count_groups
from clinpred.evaluation.discrimination import candidate_cutoffs, rates_at
from clinpred.evaluation.gamma import gammainc_series, gammaincc_cf
from clinpred.models.linear import _sigmoid


def brute_auc(p, y):
    pos, neg = p[y == 1], p[y == 0]
    d = pos[:, None] - neg[None, :]
    return (np.sum(d > 0) + 0.5 * np.sum(d == 0)) / d.size


def test_auc_equals_pair_counting_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, n).astype(float)
        y[:2] = (0, 1)
        p = rng.integers(0, 12, n) / 11.0  # coarse scores force ties
        assert abs(auc(p, y) - brute_auc(p, y)) < 1e-12


def test_auc_needs_both_classes():
    with pytest.raises(SingleClass):
        auc([0.1, 0.2], [1, 1])


def test_roc_area_equals_auc():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, 300).astype(float)
    p = np.round(rng.random(300) * 0.5 + 0.4 * y, 2)
    pts = roc_curve(p, y)
    assert tuple(pts[0]) == (0, 0) and tuple(pts[-1]) == (1, 1)
    area = np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2)
    assert abs(area - auc(p, y)) < 1e-12


def test_confusion_matrix_metrics():
    rep = discrimination_report(ConfusionMatrix(tp=869, fp=157, tn=800, fn=174))
    assert rep.accuracy == pytest.approx(1669 / 2000)
    assert rep.sensitivity == pytest.approx(869 / 1043)
    assert rep.specificity == pytest.approx(800 / 957)
    assert rep.ppv == pytest.approx(869 / 1026)
    assert rep.npv == pytest.approx(800 / 974)
    assert rep.f1 == pytest.approx(2 * 869 / (2 * 869 + 157 + 174))


def test_undefined_ratios_are_listed():
    rep = discrimination_report(ConfusionMatrix(tp=0, fp=0, tn=5, fn=3))
    assert rep.ppv is None and "ppv" in rep.undefined and "f1" in rep.undefined


def test_confusion_at_uses_strict_rule():
    cm = confusion_at([0.5, 0.6, 0.4, 0.5], [1, 1, 0, 0], 0.5)
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (1, 0, 2, 1)


def test_rates_match_direct_counts():
    rng = np.random.default_rng(2)
    y = rng.integers(0, 2, 100).astype(float)
    p = np.round(rng.random(100), 1)
    cuts = candidate_cutoffs(p)
    sens, spec = rates_at(p, y, cuts)
    for c, se, sp in zip(cuts, sens, spec):
        cm = confusion_at(p, y, c)
        assert se == cm.tp / cm.positives and sp == cm.tn / cm.negatives


def test_optimal_cutoff_policies_against_brute_force():
    rng = np.random.default_rng(3)
    y = rng.integers(0, 2, 200).astype(float)
    p = np.clip(0.35 * y + rng.random(200) * 0.65, 0, 1)
    cuts = candidate_cutoffs(p)
    sens, spec = rates_at(p, y, cuts)
    dist = (1 - sens) ** 2 + (1 - spec) ** 2
    assert optimal_cutoff(p, y) == cuts[np.flatnonzero(dist == dist.min())[0]]
    c_in = optimal_cutoff(p, y, "rule_in", 0.95)
    assert confusion_at(p, y, c_in).tn / np.sum(y == 0) >= 0.95
    assert c_in == min(c for c, s in zip(cuts, spec) if s >= 0.95)
    c_out = optimal_cutoff(p, y, "rule_out", 0.95)
    assert c_out == max(c for c, s in zip(cuts, sens) if s >= 0.95)
    with pytest.raises(TargetUnachievable):
        optimal_cutoff(p, y, "rule_in", 1.5)


def test_gamma_series_and_fraction_agree():
    # the continued fraction is only used (and only valid) for x >= a + 1
    for a in (0.5, 1.0, 2.5, 4.0, 7.5, 15.0):
        for x in (a + 1.0, a + 2.5, 2 * a + 3, 3 * a + 10):
            q_series = 1.0 - gammainc_series(a, x)
            q_cf = gammaincc_cf(a, x)
            assert abs(q_series - q_cf) < 1e-10
            assert abs(q_cf - scipy_gammaincc(a, x)) < 1e-10


def test_gammaincc_dispatch_against_scipy():
    for a in (0.5, 1.0, 2.5, 4.0, 7.5, 15.0):
        for x in (0.01, 0.3, 1.0, a, a + 1.0, 2 * a + 3, 60.0):
            assert abs(gammaincc(a, x) - scipy_gammaincc(a, x)) < 1e-12


def test_chi2_critical_value():
    assert abs(chi2_sf(15.507, 8) - 0.05) < 1e-3
    # df = 2 has the closed form exp(-x / 2)
    assert chi2_sf(3.0, 2) == pytest.approx(np.exp(-1.5), abs=1e-14)
    assert chi2_sf(0.0, 4) == 1.0


def test_hosmer_lemeshow_by_hand():
    rng = np.random.default_rng(4)
    p = rng.uniform(0.05, 0.95, 500)
    y = (rng.random(500) < p).astype(float)
    stat, pv, df = hosmer_lemeshow(p, y, 10)
    expect = 0.0
    for idx in np.array_split(np.argsort(p, kind="stable"), 10):
        o, e, n = y[idx].sum(), p[idx].sum(), idx.size
        expect += (o - e) ** 2 / (e * (1 - e / n))
    assert df == 8
    assert stat == pytest.approx(expect, rel=1e-12)
    assert pv == pytest.approx(scipy_gammaincc(4, expect / 2), abs=1e-10)


def test_hosmer_lemeshow_merges_degenerate_groups():
    p = np.concatenate([np.zeros(30), np.linspace(0.1, 0.9, 70)])
    y = (np.random.default_rng(5).random(100) < p).astype(float)
    with pytest.warns(MergedGroupWarning):
        _, _, df = hosmer_lemeshow(p, y, 10)
    assert df < 8
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MergedGroupWarning)
        with pytest.raises(EmptyExpected):
            hosmer_lemeshow(np.r_[np.zeros(90), np.full(10, 0.5)], np.r_[np.zeros(90), np.ones(10)], 10)


def test_equal_count_groups_sizes():
    groups = equal_count_groups(np.random.default_rng(6).random(103), 10)
    sizes = [g.size for g in groups]
    assert max(sizes) - min(sizes) <= 1 and sum(sizes) == 103


def _logistic_mle(X, y, offset=0.0):
    def nll(b):
        f = X @ b + offset
        return np.sum(np.logaddexp(0, f) - y * f)

    return minimize(nll, np.zeros(X.shape[1]), method="BFGS", options={"gtol": 1e-10}).x


def test_calibration_slope_and_intercept_against_generic_optimizer():
    rng = np.random.default_rng(7)
    z = rng.normal(size=800)
    y = (rng.random(800) < _sigmoid(0.3 + 0.8 * z)).astype(float)
    p = _sigmoid(z)
    lp = np.log(p / (1 - p))
    a, b = _logistic_mle(np.column_stack([np.ones(800), lp]), y)
    assert calibration_slope(p, y) == pytest.approx(b, abs=1e-5)
    (c,) = _logistic_mle(np.ones((800, 1)), y, lp)
    assert calibration_intercept(p, y) == pytest.approx(c, abs=1e-5)


def test_calibration_report_fields():
    rng = np.random.default_rng(8)
    p = rng.uniform(0.05, 0.95, 1000)
    y = (rng.random(1000) < p).astype(float)
    rep = calibration_report(p, y)
    assert rep.brier == pytest.approx(np.mean((p - y) ** 2))
    assert rep.brier == brier(p, y)
    assert rep.eo_ratio == pytest.approx(p.sum() / y.sum())
    assert rep.eci == grouped_eci(p, y)
    assert len(rep.bins) == 10 and sum(b.count for b in rep.bins) == 1000
    assert abs(rep.slope - 1) < 0.25 and abs(rep.intercept) < 0.25
    with pytest.raises(SingleClass):
        calibration_report(p, np.zeros(1000))


def _exhaustive_isotonic(v):
    n = len(v)
    best = (np.inf, None)
    for cuts in itertools.product((0, 1), repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        means = [np.mean(v[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
        if any(m2 < m1 - 1e-15 for m1, m2 in zip(means, means[1:])):
            continue
        fit = np.repeat(means, np.diff(bounds))
        sse = np.sum((v - fit) ** 2)
        if sse < best[0]:
            best = (sse, fit)
    return best[1]


def test_pava_matches_exhaustive_search():
    rng = np.random.default_rng(9)
    for _ in range(300):
        n = int(rng.integers(1, 9))
        v = rng.integers(0, 5, n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
        fit = pava(v)
        assert np.all(np.diff(fit) >= 0)
        np.testing.assert_allclose(fit, _exhaustive_isotonic(v), atol=1e-12)


def test_pava_weights_equal_repetition():
    v = np.array([3.0, 1.0, 2.0])
    np.testing.assert_allclose(pava(v, [2, 1, 1])[0], pava(np.array([3.0, 3.0, 1.0, 2.0]))[0])


def test_intercept_update_recovers_shift():
    rng = np.random.default_rng(10)
    z = rng.normal(-0.5, 1.2, 20_000)
    y = (rng.random(z.size) < _sigmoid(z)).astype(float)
    r = fit_recalibrator(_sigmoid(z - 0.7), y)
    assert abs(r.c - 0.7) < 0.05


def test_platt_identity_and_rank_invariance():
    rng = np.random.default_rng(11)
    z = rng.normal(size=20_000)
    p = _sigmoid(z)
    y = (rng.random(z.size) < p).astype(float)
    r = fit_recalibrator(p, y, "platt")
    assert abs(r.a) < 0.05 and abs(r.b - 1) < 0.05
    q = apply_recalibrator(r, p)
    assert r.b > 0
    assert abs(auc(q, y) - auc(p, y)) < 1e-12


def test_isotonic_recalibrator_is_monotone_step():
    rng = np.random.default_rng(12)
    p = np.round(rng.random(500), 2)
    y = (rng.random(500) < p**2).astype(float)
    r = fit_recalibrator(p, y, "isotonic")
    grid = np.linspace(0, 1, 300)
    assert np.all(np.diff(apply_recalibrator(r, grid)) >= 0)
    # pooled ties share a level
    out = apply_recalibrator(r, p)
    for v in np.unique(p):
        assert np.ptp(out[p == v]) == 0


def test_regression_report_against_ols_r2():
    rng = np.random.default_rng(13)
    x = rng.normal(size=200)
    t = 2 * x + rng.normal(size=200)
    A = np.column_stack([np.ones(200), x])
    fitted = A @ np.linalg.lstsq(A, t, rcond=None)[0]
    rep = regression_report(fitted, t)
    assert rep.r2 == pytest.approx(1 - np.sum((t - fitted) ** 2) / np.sum((t - t.mean()) ** 2), rel=1e-12)
    assert rep.rmse == pytest.approx(np.sqrt(np.mean((t - fitted) ** 2)))
    assert rep.mae == pytest.approx(np.mean(np.abs(t - fitted)))
    assert regression_report(np.ones(5), np.arange(5.0)).r2 is None


def test_qq_points_endpoints():
    a, b = np.arange(10.0), np.arange(10.0)[::-1] * 2
    pts = qq_points(a, b, q=5)
    assert pts.shape == (5, 2)
    np.testing.assert_allclose(pts[[0, -1]], [[0, 0], [9, 18]])


def test_overfit_gap_directions():
    g = overfit_gap(0.93, 0.85)
    assert g.gap == pytest.approx(0.08) and g.overfit
    g = overfit_gap(1.5, 1.6, "lower_is_better")
    assert g.gap == pytest.approx(0.1) and not g.overfit and g.threshold == pytest.approx(0.15)
