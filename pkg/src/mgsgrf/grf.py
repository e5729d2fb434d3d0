"""Generalized random forest used to draw whole categorical vectors.

The forest is a plain multi-output classification forest grown on the
continuous features of the minority class, with the categorical columns as
targets. Prediction does not vote: a query ``z`` gives every training row
``i`` the weight

    w_z(i) = 1/T * sum_k 1{i in L_k(z)} / |L_k(z)|

where ``L_k(z)`` is the set of training rows sharing ``z``'s leaf in tree
``k``. Sampling an index from these weights and copying that row's full
categorical vector keeps every generated combination inside the observed
ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _tree


@dataclass(frozen=True, eq=False)
class GrfTree:
    """Axis-aligned binary tree.

    ``leaf_rows[node]`` lists the training rows routed to leaf ``node``
    (empty for internal nodes); ``bootstrap`` holds the drawn row indices.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_rows: tuple
    bootstrap: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def leaves(self):
        return np.flatnonzero(self.feature < 0)

    def apply(self, X):
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        return _tree.apply_tree(X, self.feature, self.threshold, self.left, self.right)


@dataclass(frozen=True, eq=False)
class GrfForest:
    trees: tuple
    continuous: np.ndarray
    categorical: np.ndarray
    leaf_mode: str
    # flattened leaf membership, see _tree.forest_weights
    _leaf_ptr: np.ndarray
    _leaf_rows: np.ndarray
    _tree_offset: np.ndarray

    @property
    def n_trees(self):
        return len(self.trees)

    @property
    def n_train(self):
        return self.categorical.shape[0]

    def apply(self, X):
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        return np.column_stack([t.apply(X) for t in self.trees])


def _max_features(d, max_features):
    if max_features is None or max_features == "sqrt":
        return max(1, int(np.floor(np.sqrt(d))))
    if max_features == "all":
        return d
    return int(max_features)


def grf_fit(continuous, categorical, n_trees=100, rng=None, max_features="sqrt",
            bootstrap=True, leaf_mode="all"):
    """Grow ``n_trees`` trees and record leaf memberships.

    Parameters
    ----------
    continuous : array of shape (n, d)
    categorical : int array of shape (n, p)
    n_trees : int
    rng : numpy Generator
    max_features : "sqrt", "all" or int
        Number of non-constant features searched per split.
    bootstrap : bool
        Draw ``n`` rows with replacement per tree.
    leaf_mode : {"all", "inbag"}
        Whether leaf lists hold every training row or only the rows drawn
        for that tree.
    """
    X = np.ascontiguousarray(continuous, dtype=np.float64)
    Y = np.ascontiguousarray(categorical, dtype=np.int64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("continuous and categorical must be 2-D with equal row counts")
    n, d = X.shape
    p = Y.shape[1]
    if d == 0 or p == 0:
        raise ValueError("GRF needs at least one continuous input and one categorical output")
    if n < 2:
        raise ValueError("GRF needs at least 2 training rows")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if leaf_mode not in ("all", "inbag"):
        raise ValueError("leaf_mode must be 'all' or 'inbag'")
    rng = np.random.default_rng(rng)
    mf = min(d, _max_features(d, max_features))

    # relabel each output to 0..k-1 so class tables stay small
    Yc = np.empty_like(Y)
    sizes = []
    for o in range(p):
        _, Yc[:, o] = np.unique(Y[:, o], return_inverse=True)
        sizes.append(int(Yc[:, o].max()) + 1)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    XT = np.ascontiguousarray(X.T)
    trees = []
    ptr_parts, row_parts, tree_offset = [], [], []
    base = 0
    all_rows = np.arange(n)
    for _ in range(n_trees):
        if bootstrap:
            drawn = rng.integers(0, n, size=n)
        else:
            drawn = all_rows.copy()
        counts = np.bincount(drawn, minlength=n).astype(np.int64)
        seed = int(rng.integers(0, 2**31 - 1))
        feat, thr, lft, rgt, _ = _tree.build_tree(XT, Yc, offsets, int(offsets[-1]), counts, mf, seed)
        routed = _tree.apply_tree(X, feat, thr, lft, rgt)
        rows = all_rows if leaf_mode == "all" else np.flatnonzero(counts > 0)
        leaf_of = routed[rows]
        order = np.argsort(leaf_of, kind="stable")
        per_node = np.bincount(leaf_of, minlength=feat.shape[0])
        ptr = np.concatenate([[0], np.cumsum(per_node)])
        sorted_rows = rows[order]
        leaf_rows = tuple(sorted_rows[ptr[k]:ptr[k + 1]] for k in range(feat.shape[0]))
        for arr in (feat, thr, lft, rgt, drawn):
            arr.setflags(write=False)
        trees.append(GrfTree(feat, thr, lft, rgt, leaf_rows, drawn))
        tree_offset.append(base)
        ptr_parts.append(ptr[:-1] + sum(len(r) for r in row_parts))
        row_parts.append(sorted_rows)
        base += feat.shape[0]
    total = sum(len(r) for r in row_parts)
    leaf_ptr = np.concatenate(ptr_parts + [np.array([total])]).astype(np.int64)
    return GrfForest(tuple(trees), X, Y, leaf_mode, leaf_ptr,
                     np.concatenate(row_parts).astype(np.int64),
                     np.array(tree_offset, dtype=np.int64))


def grf_weights(forest, z):
    """Training-row weights for one query (1-D) or a batch of queries (2-D)."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    leaves = forest.apply(np.atleast_2d(z))
    w = _tree.forest_weights(leaves, forest._leaf_ptr, forest._leaf_rows,
                             forest._tree_offset, forest.n_train)
    return w[0] if single else w


def grf_sample_index(forest, z, rng, chunk=1024):
    """Draw one training row index per query from its GRF weights."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    u = rng.random(z.shape[0])
    out = np.empty(z.shape[0], dtype=np.int64)
    for s in range(0, z.shape[0], chunk):
        w = grf_weights(forest, z[s:s + chunk])
        cum = np.cumsum(w, axis=1)
        target = u[s:s + chunk] * cum[:, -1]
        pick = (cum <= target[:, None]).sum(axis=1)
        out[s:s + chunk] = np.minimum(pick, forest.n_train - 1)
    return out


def grf_sample(forest, z, rng):
    """Categorical vector(s) copied from rows drawn by :func:`grf_weights`."""
    z = np.asarray(z, dtype=np.float64)
    idx = grf_sample_index(forest, z, rng)
    out = forest.categorical[idx]
    return out[0] if z.ndim == 1 else out


class GrfClassifier:
    """Deterministic multi-output predictor built on the GRF weights.

    ``predict`` returns the training combination with the largest total
    weight (ties go to the lexicographically smallest combination).
    """

    def __init__(self, n_trees=100, max_features="sqrt", leaf_mode="all", rng=None):
        self.n_trees = n_trees
        self.max_features = max_features
        self.leaf_mode = leaf_mode
        self.rng = rng

    def fit(self, X, Y):
        self.forest_ = grf_fit(X, Y, self.n_trees, np.random.default_rng(self.rng),
                               self.max_features, leaf_mode=self.leaf_mode)
        self.combos_, self.combo_of_ = np.unique(np.asarray(Y), axis=0, return_inverse=True)
        self.combo_of_ = self.combo_of_.reshape(-1)
        return self

    def predict(self, X):
        w = grf_weights(self.forest_, np.atleast_2d(X))
        agg = np.zeros((w.shape[0], self.combos_.shape[0]))
        for c in range(self.combos_.shape[0]):
            agg[:, c] = w[:, self.combo_of_ == c].sum(axis=1)
        return self.combos_[np.argmax(agg, axis=1)]
