"""Distances over mixed features and exact nearest-neighbour search.

Three metrics are supported:

* ``L2`` on the continuous block,
* ``VDM``, a value difference metric on the categorical block, summing
  ``2 |P(y=0 | x_j=u) - P(y=0 | x_j=v)|`` over columns,
* ``NC``, the SMOTE-NC distance
  ``sqrt(||x - x'||^2 + C^2 * #{j : u_j != v_j})``.

Neighbour search is brute force. Ties are broken by the smaller row index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

_CHUNK = 2048


@dataclass(frozen=True)
class VdmTable:
    """``prob[j][u] = P(y=0 | x_j = u)`` with raw frequencies.

    ``present[j][u]`` is False for modalities never observed; querying them
    raises.
    """

    prob: tuple
    present: tuple


@dataclass(frozen=True)
class Metric:
    kind: str
    C: float = 0.0
    table: VdmTable = None

    def __post_init__(self):
        if self.kind not in ("L2", "VDM", "NC"):
            raise ValueError(f"unknown metric {self.kind!r}")
        if self.kind == "NC" and not self.C >= 0:
            raise ValueError("NC scale C must be non-negative")
        if self.kind == "VDM" and self.table is None:
            raise ValueError("VDM metric needs a fitted VdmTable")


L2 = Metric("L2")


def nc_metric(C):
    return Metric("NC", C=float(C))


def vdm_metric(table):
    return Metric("VDM", table=table)


def nc_scale(minority_continuous):
    """Median of the per-column population standard deviations.

    For an even number of columns the lower median is used.
    """
    x = np.asarray(minority_continuous, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] == 0:
        return 0.0
    stds = np.sort(x.std(axis=0))
    return float(stds[(len(stds) - 1) // 2])


def fit_vdm(categorical, labels, cardinalities=None):
    """Tabulate ``P(y=0 | x_j = u)`` on the full dataset (both classes)."""
    cat = np.asarray(categorical, dtype=np.int64)
    labels = np.asarray(labels)
    if cardinalities is None:
        cardinalities = [int(c) + 1 for c in cat.max(axis=0)] if cat.size else [1] * cat.shape[1]
    prob, present = [], []
    for j, m in enumerate(cardinalities):
        total = np.bincount(cat[:, j], minlength=m).astype(np.float64)
        zeros = np.bincount(cat[:, j], weights=(labels == 0).astype(np.float64), minlength=m)
        seen = total > 0
        p = np.full(m, np.nan)
        p[seen] = zeros[seen] / total[seen]
        p.setflags(write=False)
        seen.setflags(write=False)
        prob.append(p)
        present.append(seen)
    return VdmTable(tuple(prob), tuple(present))


def _vdm_column(table, j, codes):
    codes = np.asarray(codes, dtype=np.int64)
    m = table.prob[j].shape[0]
    if codes.size and (codes.min() < 0 or codes.max() >= m or not np.all(table.present[j][codes])):
        bad = codes[(codes < 0) | (codes >= m)]
        if not bad.size:
            bad = codes[~table.present[j][codes]]
        raise KeyError(f"modality {int(bad[0])} of column {j} is unknown to the VDM table")
    return table.prob[j][codes]


def vdm_delta(table, j, u, v):
    pu, pv = _vdm_column(table, j, [u, v])
    return 2.0 * abs(pu - pv)


def _split(x):
    cont, cat = x
    cont = np.zeros(0) if cont is None else np.asarray(cont, dtype=np.float64)
    cat = np.zeros(0, dtype=np.int64) if cat is None else np.asarray(cat)
    return cont, cat


def distance(metric, x, y):
    """Distance between two rows given as ``(continuous, categorical)`` pairs.

    For ``L2`` the categorical part is ignored and may be ``None``; for
    ``VDM`` the continuous part is ignored.
    """
    xc, xk = _split(x)
    yc, yk = _split(y)
    if metric.kind in ("L2", "NC") and xc.shape != yc.shape:
        raise ValueError(f"continuous block shapes differ: {xc.shape} vs {yc.shape}")
    if metric.kind in ("VDM", "NC") and xk.shape != yk.shape:
        raise ValueError(f"categorical block shapes differ: {xk.shape} vs {yk.shape}")
    if metric.kind == "L2":
        return float(np.sqrt(np.sum((xc - yc) ** 2)))
    if metric.kind == "NC":
        mism = int(np.sum(xk != yk))
        return float(np.sqrt(np.sum((xc - yc) ** 2) + metric.C ** 2 * mism))
    return float(sum(vdm_delta(metric.table, j, int(u), int(v)) for j, (u, v) in enumerate(zip(xk, yk))))


def pairwise(metric, a_cont, a_cat, b_cont, b_cat):
    """Distance matrix between the rows of ``a`` and the rows of ``b``."""
    if metric.kind == "L2":
        return cdist(np.atleast_2d(a_cont), np.atleast_2d(b_cont), "euclidean")
    a_cat = np.atleast_2d(np.asarray(a_cat, dtype=np.int64))
    b_cat = np.atleast_2d(np.asarray(b_cat, dtype=np.int64))
    if a_cat.shape[1] != b_cat.shape[1]:
        raise ValueError("categorical block widths differ")
    if metric.kind == "NC":
        sq = cdist(np.atleast_2d(a_cont), np.atleast_2d(b_cont), "sqeuclidean")
        mism = np.empty(sq.shape)
        for s in range(0, a_cat.shape[0], _CHUNK):
            mism[s:s + _CHUNK] = (a_cat[s:s + _CHUNK, None, :] != b_cat[None, :, :]).sum(axis=2)
        return np.sqrt(sq + metric.C ** 2 * mism)
    out = np.zeros((a_cat.shape[0], b_cat.shape[0]))
    for j in range(a_cat.shape[1]):
        pa = _vdm_column(metric.table, j, a_cat[:, j])
        pb = _vdm_column(metric.table, j, b_cat[:, j])
        out += 2.0 * np.abs(pa[:, None] - pb[None, :])
    return out


def _order(dist, k):
    # stable sort keeps the smaller index first among equal distances
    return np.argsort(dist, axis=-1, kind="stable")[..., :k]


def knn(metric, cont, cat, query, k, include_self=False):
    """Indices of the ``k`` nearest rows of the pool ``(cont, cat)``.

    ``query`` is either a row index of the pool or a ``(continuous,
    categorical)`` pair. With a pool member as query and
    ``include_self=True`` the query comes first; with ``include_self=False``
    it is excluded from the candidates.
    """
    n = _pool_size(cont, cat)
    member = isinstance(query, (int, np.integer))
    available = n - (1 if member and not include_self else 0)
    if k < 1 or k > available:
        raise ValueError(f"need {k} neighbours but only {available} candidate rows; lower K")
    if member:
        qc = None if cont is None else np.asarray(cont)[[query]]
        qk = None if cat is None else np.asarray(cat)[[query]]
    else:
        qc, qk = query
        qc = None if qc is None else np.atleast_2d(qc)
        qk = None if qk is None else np.atleast_2d(qk)
    dist = pairwise(metric, qc, qk, cont, cat)[0]
    if member:
        dist[query] = -1.0 if include_self else np.inf
    return _order(dist, k)


def knn_all(metric, cont, cat, k, include_self=False):
    """Neighbour lists for every pool row, shape ``(n, k)``."""
    n = _pool_size(cont, cat)
    available = n if include_self else n - 1
    if k < 1 or k > available:
        raise ValueError(f"need {k} neighbours but only {available} candidate rows; lower K")
    out = np.empty((n, k), dtype=np.int64)
    for s in range(0, n, _CHUNK):
        rows = np.arange(s, min(n, s + _CHUNK))
        qc = None if cont is None else np.asarray(cont)[rows]
        qk = None if cat is None else np.asarray(cat)[rows]
        dist = pairwise(metric, qc, qk, cont, cat)
        dist[np.arange(rows.size), rows] = -1.0 if include_self else np.inf
        out[rows] = _order(dist, k)
    return out


def knn_query(metric, cont, cat, q_cont, q_cat, k):
    """Neighbour lists of external query rows against the pool."""
    n = _pool_size(cont, cat)
    if k < 1 or k > n:
        raise ValueError(f"need {k} neighbours but only {n} candidate rows; lower K")
    m = (np.atleast_2d(q_cont) if q_cont is not None else np.atleast_2d(q_cat)).shape[0]
    out = np.empty((m, k), dtype=np.int64)
    for s in range(0, m, _CHUNK):
        sl = slice(s, min(m, s + _CHUNK))
        dist = pairwise(metric, None if q_cont is None else q_cont[sl],
                        None if q_cat is None else q_cat[sl], cont, cat)
        out[sl] = _order(dist, k)
    return out


def _pool_size(cont, cat):
    if cont is not None:
        return np.asarray(cont).shape[0]
    return np.asarray(cat).shape[0]
