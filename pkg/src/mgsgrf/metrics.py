"""Coherence and association diagnostics, ranking metrics."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


class CombinationSet:
    """Distinct categorical vectors observed in a dataset (or one class of it)."""

    def __init__(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        self.width = rows.shape[1]
        self._set = frozenset(map(tuple, rows.tolist()))

    @classmethod
    def of_class(cls, ds, label=1):
        return cls(ds.categorical[ds.labels == label].reshape(-1, ds.p))

    def __contains__(self, row):
        return tuple(int(v) for v in row) in self._set

    def __len__(self):
        return len(self._set)

    def __iter__(self):
        return iter(sorted(self._set))


def coherence(synthetic_categorical, reference):
    """Fraction of synthetic rows whose full categorical vector is in ``reference``."""
    rows = np.asarray(synthetic_categorical, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.shape[0] == 0:
        raise ValueError("coherence needs at least one synthetic row")
    if not isinstance(reference, CombinationSet):
        reference = CombinationSet(reference)
    if rows.shape[1] != reference.width:
        raise ValueError("synthetic rows and reference have different widths")
    hits = sum(tuple(r) in reference._set for r in rows.tolist())
    return hits / rows.shape[0]


def association(classifier_factory, minority_continuous, minority_categorical, bayes=None):
    """Leave-one-out association level of a multi-output classifier.

    ``classifier_factory()`` must return an object with ``fit(X, Y)`` and
    ``predict(X)``. A prediction is wrong when any categorical column
    differs. With ``bayes`` (a callable mapping continuous rows to predicted
    vectors) the result is ``1 - (loo_error - bayes_error)``; without it the
    plain leave-one-out accuracy is returned. Values are not clipped.
    """
    X = np.asarray(minority_continuous, dtype=np.float64)
    Y = np.asarray(minority_categorical, dtype=np.int64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if n < 2:
        raise ValueError("association needs at least 2 rows")
    errors = 0
    for ell in range(n):
        keep = np.arange(n) != ell
        model = classifier_factory().fit(X[keep], Y[keep])
        pred = np.asarray(model.predict(X[ell:ell + 1])).reshape(-1)
        errors += int(np.any(pred != Y[ell]))
    loo_error = errors / n
    if bayes is None:
        return 1.0 - loo_error
    best = np.asarray(bayes(X)).reshape(n, -1)
    bayes_error = float(np.mean(np.any(best != Y, axis=1)))
    return 1.0 - (loo_error - bayes_error)


class KnnClassifier:
    """Multi-output k-NN on the continuous block, per-column vote (ties to the smaller code)."""

    def __init__(self, k=1):
        self.k = k

    def fit(self, X, Y):
        self.X_ = np.asarray(X, dtype=np.float64)
        self.Y_ = np.asarray(Y, dtype=np.int64)
        if self.X_.shape[0] < self.k:
            raise ValueError(f"{self.k}-NN needs at least {self.k} training rows")
        return self

    def predict(self, X):
        from .geometry import L2, knn_query
        nn = knn_query(L2, self.X_, None, np.atleast_2d(X), None, self.k)
        out = np.empty((nn.shape[0], self.Y_.shape[1]), dtype=np.int64)
        for j in range(self.Y_.shape[1]):
            codes = self.Y_[nn, j]
            out[:, j] = [np.argmax(np.bincount(c)) for c in codes]
        return out


# ---------------------------------------------------------------------------
# ranking metrics

def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape or s.size == 0:
        raise ValueError("scores and labels must be non-empty and of equal length")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise ValueError("both classes are needed")
    return s, y.astype(np.int64)


def roc_auc(scores, labels):
    """Mann-Whitney estimate; tied scores count one half."""
    s, y = _check(scores, labels)
    r = rankdata(s)
    n_pos = y.sum()
    n_neg = y.size - n_pos
    return float((r[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def pr_curve(scores, labels):
    """Operating points of the descending-score sweep, tied scores grouped.

    Returns ``(precision, recall, thresholds)``, one entry per distinct
    score, from the highest threshold down.
    """
    s, y = _check(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return tp / (tp + fp), tp / y.sum(), s[last]


def roc_curve(scores, labels):
    """``(fpr, tpr, thresholds)`` starting at the origin."""
    s, y = _check(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return (np.r_[0.0, fp / (y.size - y.sum())], np.r_[0.0, tp / y.sum()], np.r_[np.inf, s[last]])


def pr_auc(scores, labels):
    """Average precision: sum over thresholds of precision times recall increment."""
    precision, recall, _ = pr_curve(scores, labels)
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def precision_at_recall(scores, labels, x=0.2):
    """Highest precision among operating points whose recall is at least ``x``."""
    if not 0 < x <= 1:
        raise ValueError("recall level must lie in (0, 1]")
    precision, recall, _ = pr_curve(scores, labels)
    return float(precision[recall >= x].max())
