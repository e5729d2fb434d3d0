"""Compiled kernels for the multi-output CART trees used by the GRF."""

import numpy as np
from numba import njit

_SMALL = 128


@njit(cache=True)
def _argsort_into(vals, size, order):
    """Stable argsort of ``vals[:size]`` written to ``order[:size]``."""
    if size > _SMALL:
        o = np.argsort(vals[:size], kind="quicksort")
        for a in range(size):
            order[a] = o[a]
        return
    for a in range(size):
        order[a] = a
    for a in range(1, size):
        cur = order[a]
        v = vals[cur]
        b = a - 1
        while b >= 0 and vals[order[b]] > v:
            order[b + 1] = order[b]
            b -= 1
        order[b + 1] = cur


@njit(cache=True)
def build_tree(XT, Y, offsets, n_classes_total, counts, max_features, seed):
    """Grow one tree to purity on the rows with ``counts > 0``.

    ``XT`` is the transposed input matrix, shape ``(d, n)``, so that the
    values of one feature are contiguous.

    ``counts`` are bootstrap multiplicities used as integer sample weights.
    The split criterion is the weighted mean Gini impurity across outputs.
    At every node features are visited in a fresh random order; features
    constant within the node are skipped without counting, and the search
    stops once ``max_features`` non-constant features were evaluated.
    Equal scores are resolved towards the smaller feature index, then the
    smaller threshold.

    Returns ``(feature, threshold, left, right, n_nodes)``; leaves have
    ``feature == -1``. Rows with ``x <= threshold`` go left.
    """
    np.random.seed(seed)
    d, n = XT.shape
    p = Y.shape[1]
    idx = np.flatnonzero(counts > 0)
    m = idx.size
    max_nodes = max(1, 2 * m - 1)
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)

    st_node = np.empty(max_nodes, dtype=np.int64)
    st_start = np.empty(max_nodes, dtype=np.int64)
    st_end = np.empty(max_nodes, dtype=np.int64)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    top = 1
    n_nodes = 1

    cc = np.zeros(n_classes_total, dtype=np.int64)
    cl = np.zeros(n_classes_total, dtype=np.int64)
    cr = np.zeros(n_classes_total, dtype=np.int64)
    sq_l = np.zeros(p, dtype=np.int64)
    sq_r = np.zeros(p, dtype=np.int64)
    perm = np.arange(d)
    tmp = np.empty(m, dtype=np.int64)
    vals = np.empty(m)
    order = np.empty(m, dtype=np.int64)

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        size = end - start
        if size < 2:
            continue

        cc[:] = 0
        w = 0
        for a in range(start, end):
            r = idx[a]
            c = counts[r]
            w += c
            for o in range(p):
                cc[offsets[o] + Y[r, o]] += c
        pure = True
        for o in range(p):
            for k in range(offsets[o], offsets[o + 1]):
                if cc[k] != 0 and cc[k] != w:
                    pure = False
                    break
            if not pure:
                break
        if pure:
            continue

        # lazy Fisher-Yates over features
        for j in range(d):
            perm[j] = j
        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        for j in range(d):
            if visited >= max_features:
                break
            s = j + np.random.randint(d - j)
            f = perm[s]
            perm[s] = perm[j]
            perm[j] = f

            vmin = np.inf
            vmax = -np.inf
            for a in range(size):
                v = XT[f, idx[start + a]]
                vals[a] = v
                if v < vmin:
                    vmin = v
                if v > vmax:
                    vmax = v
            if vmin == vmax:
                continue
            visited += 1

            _argsort_into(vals, size, order)
            cl[:] = 0
            cr[:] = cc
            wl = 0
            wr = w
            for o in range(p):
                sq_l[o] = 0
                acc = 0
                for k in range(offsets[o], offsets[o + 1]):
                    acc += cc[k] * cc[k]
                sq_r[o] = acc
            for a in range(size - 1):
                r = idx[start + order[a]]
                c = counts[r]
                for o in range(p):
                    k = offsets[o] + Y[r, o]
                    sq_l[o] += (cl[k] + c) * (cl[k] + c) - cl[k] * cl[k]
                    cl[k] += c
                    sq_r[o] += (cr[k] - c) * (cr[k] - c) - cr[k] * cr[k]
                    cr[k] -= c
                wl += c
                wr -= c
                v0 = vals[order[a]]
                v1 = vals[order[a + 1]]
                if not v1 > v0:
                    continue
                # minimising wl*mean_gini_l + wr*mean_gini_r
                tot_l = 0
                tot_r = 0
                for o in range(p):
                    tot_l += sq_l[o]
                    tot_r += sq_r[o]
                score = -(tot_l / wl + tot_r / wr)
                thr = 0.5 * (v0 + v1)
                if not thr < v1:
                    thr = v0
                if (score < best_score
                        or (score == best_score
                            and (f < best_f or (f == best_f and thr < best_thr)))):
                    best_score = score
                    best_f = f
                    best_thr = thr

        if best_f < 0:
            continue

        # stable partition of idx[start:end]
        n_left = 0
        for a in range(start, end):
            if XT[best_f, idx[a]] <= best_thr:
                n_left += 1
        li = 0
        ri = n_left
        for a in range(start, end):
            r = idx[a]
            if XT[best_f, r] <= best_thr:
                tmp[li] = r
                li += 1
            else:
                tmp[ri] = r
                ri += 1
        for a in range(size):
            idx[start + a] = tmp[a]

        feature[node] = best_f
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        st_node[top] = rnode
        st_start[top] = start + n_left
        st_end[top] = end
        top += 1
        st_node[top] = lnode
        st_start[top] = start
        st_end[top] = start + n_left
        top += 1

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], n_nodes


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def forest_weights(query_leaves, leaf_ptr, leaf_rows, tree_offset, n):
    """Leaf co-occurrence weights for a batch of queries.

    ``query_leaves[q, t]`` is the leaf reached in tree ``t``. Rows of leaf
    ``l`` of tree ``t`` are ``leaf_rows[leaf_ptr[o + l]:leaf_ptr[o + l + 1]]``
    with ``o = tree_offset[t]``.
    """
    m, T = query_leaves.shape
    out = np.zeros((m, n))
    for q in range(m):
        for t in range(T):
            o = tree_offset[t] + query_leaves[q, t]
            a = leaf_ptr[o]
            b = leaf_ptr[o + 1]
            share = 1.0 / (b - a)
            for s in range(a, b):
                out[q, leaf_rows[s]] += share
        for i in range(n):
            out[q, i] /= T
    return out
