import math

import numpy as np
import pytest

from mgsgrf.data import MixedDataset
from mgsgrf.evaluation import (BenchmarkPlan, cell_seed, encode_features, gbdt_fit, pooled_curves,
                               run_benchmark, stratified_folds)
from mgsgrf.metrics import roc_auc

from conftest import make_mixed

FIELDS = ("pr_auc", "roc_auc", "pr_at_rec", "coherence", "n_synthetic", "status")


def _same(a, b):
    for f in FIELDS:
        x, y = getattr(a, f), getattr(b, f)
        if isinstance(x, float) and math.isnan(x):
            assert math.isnan(y)
        else:
            assert x == y


def test_separable_toy():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((200, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    ds = MixedDataset(X, np.empty((200, 0), int), y)
    model = gbdt_fit(ds)
    assert roc_auc(model.predict_proba(ds), y) == 1.0


def test_single_class_rejected():
    ds = make_mixed(30, 0)
    with pytest.raises(ValueError):
        gbdt_fit(ds)


def test_weight_scale_invariance(mixed):
    w = np.random.default_rng(0).uniform(0.5, 2.0, mixed.n_rows)
    a = gbdt_fit(mixed, w, rng=1).predict_proba(mixed)
    b = gbdt_fit(mixed, 2 * w, rng=1).predict_proba(mixed)
    assert np.max(np.abs(a - b)) < 1e-9


def test_one_hot_encoding():
    ds = MixedDataset(np.zeros((2, 1)), np.array([[2], [0]]), np.array([0, 1]), (3,))
    assert encode_features(ds).tolist() == [[0, 0, 0, 1], [0, 1, 0, 0]]


def test_folds_stratified_and_seeded():
    y = np.r_[np.zeros(95, int), np.ones(5, int)]
    folds = stratified_folds(y, 5, 0, 0)
    assert all(y[te].sum() == 1 for _, te in folds)
    again = stratified_folds(y, 5, 0, 0)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))
    other = stratified_folds(y, 5, 0, 1)
    assert not all(np.array_equal(a[1], b[1]) for a, b in zip(folds, other))


def test_cell_seed_distinct():
    seeds = {cell_seed(0, r, f, s) for r in range(3) for f in range(5) for s in ("none", "mgs-grf")}
    assert len(seeds) == 30


@pytest.fixture(scope="module")
def bench():
    ds = make_mixed(150, 30, seed=3)
    plan = BenchmarkPlan(ds, ["none", "smote-nc", "mgs-grf"], repeats=2, folds=5, seed=4, keep_scores=True)
    return plan, run_benchmark(plan)


def test_cell_count_and_aggregate(bench):
    plan, res = bench
    assert len(res.cells) == 30
    agg = res.aggregate()
    assert set(agg) == {"none", "smote-nc", "mgs-grf"}
    assert all(agg[s]["n_cells"] == 10 and agg[s]["n_failed"] == 0 for s in agg)
    assert agg["none"]["coherence"]["mean"] == 1.0
    assert agg["mgs-grf"]["coherence"]["mean"] == 1.0
    for c in res.cells:
        assert 0 <= c.pr_auc <= 1 and 0 <= c.roc_auc <= 1 and 0 < c.pr_at_rec <= 1
        assert c.time_resample >= 0 and c.time_fit > 0


def test_same_training_rows_across_strategies(bench):
    _, res = bench
    rows = {}
    for c in res.cells:
        rows.setdefault((c.repeat, c.fold), []).append(tuple(c.test_rows))
    assert all(len(set(v)) == 1 for v in rows.values())


def test_rerun_identical(bench):
    plan, res = bench
    again = run_benchmark(plan)
    for a, b in zip(res.cells, again.cells):
        _same(a, b)


def test_parallel_identical(bench):
    plan, res = bench
    par = run_benchmark(BenchmarkPlan(plan.dataset, ["none", "smote-nc", "mgs-grf"], repeats=2, folds=5,
                                      seed=4, n_jobs=2))
    for a, b in zip(res.cells, par.cells):
        _same(a, b)


def test_pooled_curves(bench):
    _, res = bench
    curves = pooled_curves(res, "mgs-grf")
    recall, precision = curves["pr"]
    assert recall[-1] == 1.0 and np.all(np.diff(recall) >= 0)
    fpr, tpr = curves["roc"]
    assert fpr[0] == tpr[0] == 0.0 and fpr[-1] == tpr[-1] == 1.0


def test_failed_cells_are_recorded():
    # 3 positives over 5 folds: two test folds have no positive row
    ds = make_mixed(60, 3, seed=0)
    with pytest.warns(UserWarning):
        res = run_benchmark(BenchmarkPlan(ds, ["none"], repeats=1, folds=5))
    status = [c.status for c in res.cells]
    assert status.count("failed") == 2
    assert all(math.isnan(c.pr_auc) for c in res.cells if c.status == "failed")
    assert res.aggregate()["none"]["n_failed"] == 2


def test_plan_validation(mixed):
    with pytest.raises(ValueError):
        BenchmarkPlan(mixed, ["none", "none"])
    with pytest.raises(ValueError):
        BenchmarkPlan(mixed, ["none"], folds=1)
