import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgsgrf.metrics import (CombinationSet, KnnClassifier, association, coherence, pr_auc, pr_curve,
                            precision_at_recall, roc_auc)

S = np.array([0.9, 0.8, 0.3, 0.2])
L = np.array([1, 0, 1, 0])


def brute_roc(s, y):
    pos, neg = s[y == 1], s[y == 0]
    return float(np.mean((pos[:, None] > neg[None, :]) + 0.5 * (pos[:, None] == neg[None, :])))


def brute_points(s, y):
    """(precision, recall) at every distinct threshold t, predicting score >= t."""
    out = []
    for t in np.unique(s)[::-1]:
        pred = s >= t
        tp = np.sum(pred & (y == 1))
        out.append((tp / pred.sum(), tp / y.sum()))
    return out


def brute_ap(s, y):
    total, prev = 0.0, 0.0
    for prec, rec in brute_points(s, y):
        total += (rec - prev) * prec
        prev = rec
    return total


def brute_pr_at(s, y, x):
    return max(p for p, r in brute_points(s, y) if r >= x)


def test_hand_values():
    assert roc_auc(S, L) == 0.75
    assert pr_auc(S, L) == pytest.approx(5 / 6, abs=1e-15)
    assert precision_at_recall(S, L, 0.6) == pytest.approx(2 / 3, abs=1e-15)


def test_perfect_classifier():
    s, y = np.array([0.9, 0.8, 0.1]), np.array([1, 1, 0])
    assert roc_auc(s, y) == 1.0 and pr_auc(s, y) == 1.0
    assert precision_at_recall(s, y, 0.2) == 1.0


def test_small_recall_limit():
    rng = np.random.default_rng(0)
    s, y = rng.random(50), rng.integers(0, 2, 50)
    y[:2] = [0, 1]
    best = max(p for p, r in brute_points(s, y) if r > 0)
    assert precision_at_recall(s, y, 1e-9) == best


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_metrics_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 201))
    s = np.round(rng.random(n), int(rng.integers(1, 4)))  # rounding creates ties
    y = rng.integers(0, 2, n)
    y[0], y[-1] = 0, 1
    x = float(rng.uniform(0.01, 1.0))
    assert abs(roc_auc(s, y) - brute_roc(s, y)) < 1e-12
    assert abs(pr_auc(s, y) - brute_ap(s, y)) < 1e-12
    assert abs(precision_at_recall(s, y, x) - brute_pr_at(s, y, x)) < 1e-12


def test_curve_ends_at_full_recall():
    prec, rec, _ = pr_curve(S, L)
    assert rec[-1] == 1.0 and prec[-1] == 0.5


def test_metric_errors():
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(ValueError):
        precision_at_recall(S, L, 0.0)


def test_coherence_counts():
    assert coherence([[0, 1], [0, 2]], CombinationSet([[0, 1]])) == 0.5
    ref = np.array([[0, 1], [2, 2], [1, 0]])
    assert coherence(ref[[0, 0, 2, 1]], ref) == 1.0
    with pytest.raises(ValueError):
        coherence(np.empty((0, 2)), ref)


def test_association_perfect():
    X = np.array([[0.0], [0.1], [5.0], [5.1]])
    Y = np.array([[0], [0], [1], [1]])
    assert association(lambda: KnnClassifier(1), X, Y, lambda x: (x[:, 0] > 2).astype(int)) == 1.0


def test_association_alternating():
    # each point's nearest other point carries the other combination
    X = np.array([[0.0], [1.0]])
    Y = np.array([[0], [1]])
    assert association(lambda: KnnClassifier(1), X, Y) == 0.0
    assert association(lambda: KnnClassifier(1), X, Y, lambda x: Y.reshape(-1)) == 0.0


def test_association_uses_full_vector():
    X = np.array([[0.0], [0.1], [5.0], [5.1]])
    Y = np.array([[0, 0], [0, 1], [1, 1], [1, 1]])
    # rows 0 and 1 miss on the second column only, still two errors
    assert association(lambda: KnnClassifier(1), X, Y) == 0.5
