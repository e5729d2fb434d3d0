"""Rebalancing strategies for imbalanced mixed-feature data.

Every oversampler follows the same loop: pick a minority row uniformly at
random, look up its minority neighbours, then generate the continuous block
and the categorical block of one synthetic row. They differ in the metric,
the continuous generator (segment interpolation or a local Gaussian), and
the categorical generator (per-column vote, k-NN copy, GRF draw).

Strategy names accepted by :func:`resample`::

    none, cw, ros, rus, smote, smote-n, smote-nc,
    mgs, mgs-nc, mgs-knn (parameter k), mgs-1nn, mgs-5nn, mgs-grf
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .data import MixedDataset, concat
from .grf import grf_fit, grf_sample_index

SMOTE_K = 5
STRATEGIES = ("none", "cw", "ros", "rus", "smote", "smote-n", "smote-nc",
              "mgs", "mgs-nc", "mgs-knn", "mgs-grf")


class SamplerError(ValueError):
    """A strategy's preconditions are not met by the dataset."""


@dataclass(frozen=True)
class SamplerKind:
    """A strategy name plus its hyperparameters.

    ``k_neighbors`` defaults to 5 for the SMOTE family and ``d + 1`` for the
    MGS family; ``knn_k`` is the classifier size of ``mgs-knn``.
    """

    name: str
    k_neighbors: int = None
    knn_k: int = 5
    n_trees: int = 100
    max_features: object = "sqrt"
    leaf_mode: str = "all"

    def __post_init__(self):
        if self.name not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.name!r}; choose from {', '.join(STRATEGIES)}")

    @classmethod
    def parse(cls, spec, **params):
        """Build from a name such as ``"smote-nc"``, ``"mgs-1nn"`` or ``"mgs-knn:3"``."""
        s = spec.strip().lower().replace("_", "-")
        m = re.fullmatch(r"mgs-(\d+)nn", s) or re.fullmatch(r"mgs-knn[:(]?(\d+)\)?", s)
        if m:
            return cls("mgs-knn", knn_k=int(m.group(1)), **params)
        aliases = {"classweight": "cw", "class-weight": "cw", "smoten": "smote-n",
                   "smotenc": "smote-nc", "mgsnc": "mgs-nc", "mgsgrf": "mgs-grf"}
        return cls(aliases.get(s, s), **params)

    @property
    def label(self):
        if self.name == "mgs-knn":
            return f"mgs-{self.knn_k}nn"
        return self.name


@dataclass(frozen=True)
class LocalGaussian:
    """Mean and covariance of one minority row's neighbourhood.

    ``factor`` is the lower Cholesky factor of ``cov + ridge * I``.
    """

    center: int
    mean: np.ndarray
    cov: np.ndarray
    factor: np.ndarray
    ridge: float


@dataclass(eq=False)
class ResampleResult:
    """Output of a strategy.

    ``provenance`` maps ``center``, ``neighbor`` and ``draw`` to one integer
    per synthetic row (row indices of the input dataset, ``-1`` when the
    field does not apply).
    """

    dataset: MixedDataset
    synthetic_mask: np.ndarray
    sample_weights: np.ndarray = None
    provenance: dict = field(default_factory=dict)

    @property
    def n_synthetic(self):
        return int(self.synthetic_mask.sum())

    @property
    def synthetic_categorical(self):
        return self.dataset.categorical[self.synthetic_mask]


# ---------------------------------------------------------------------------
# building blocks

def smote_continuous(center, neighbor, w):
    """Point at fraction ``w`` of the segment from ``center`` to ``neighbor``."""
    # convex form so that w=0 and w=1 return the endpoints bit for bit
    center = np.asarray(center, dtype=np.float64)
    return (1.0 - w) * center + w * np.asarray(neighbor, dtype=np.float64)


def categorical_vote(neighbor_rows, j=None):
    """Most frequent code per column, ties to the smallest code.

    With ``j`` given returns that column's winner, otherwise the whole
    voted vector.
    """
    rows = np.atleast_2d(np.asarray(neighbor_rows, dtype=np.int64))
    if rows.shape[0] == 0:
        raise ValueError("vote needs at least one neighbour")
    if j is not None:
        return int(np.argmax(np.bincount(rows[:, j])))
    return np.array([np.argmax(np.bincount(rows[:, c])) for c in range(rows.shape[1])], dtype=np.int64)


def _vote_batch(cat, neighbors, cardinalities):
    """Vote for many neighbour sets at once; ``neighbors`` has shape (m, K)."""
    m = neighbors.shape[0]
    out = np.empty((m, cat.shape[1]), dtype=np.int64)
    for j, card in enumerate(cardinalities):
        codes = cat[neighbors, j]
        counts = np.zeros((m, card), dtype=np.int64)
        for k in range(codes.shape[1]):
            np.add.at(counts, (np.arange(m), codes[:, k]), 1)
        out[:, j] = np.argmax(counts, axis=1)
    return out


def _ridge(cov):
    d = cov.shape[0]
    return max(1e-10, 1e-10 * float(np.trace(cov)) / d)


def local_gaussians(X, neighbors):
    """Local mean / covariance / Cholesky factor for each neighbourhood.

    Covariances use the ``1/K`` normalisation around the local mean.
    Returns stacked arrays ``(means, covs, factors, ridges)``.
    """
    X = np.asarray(X, dtype=np.float64)
    pts = X[neighbors]                       # (n, K, d)
    means = pts.mean(axis=1)
    centered = pts - means[:, None, :]
    covs = np.einsum("nki,nkj->nij", centered, centered) / neighbors.shape[1]
    covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
    d = X.shape[1]
    factors = np.empty_like(covs)
    ridges = np.empty(covs.shape[0])
    eye = np.eye(d)
    for i, cov in enumerate(covs):
        r = _ridge(cov)
        while True:
            try:
                factors[i] = np.linalg.cholesky(cov + r * eye)
                break
            except np.linalg.LinAlgError:
                r *= 10.0
        ridges[i] = r
    return means, covs, factors, ridges


def fit_mgs(X, K=None, metric=None, categorical=None):
    """One :class:`LocalGaussian` per row of ``X``.

    Neighbourhoods are the ``K`` nearest rows including the row itself
    (``K = d + 1`` by default) under ``metric`` (L2 unless given; NC needs
    ``categorical``).
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if d == 0:
        raise SamplerError("MGS needs at least one continuous feature")
    K = d + 1 if K is None else K
    neighbors = geometry.knn_all(metric or geometry.L2, X, categorical, K, include_self=True)
    means, covs, factors, ridges = local_gaussians(X, neighbors)
    return [LocalGaussian(i, means[i], covs[i], factors[i], float(ridges[i])) for i in range(n)]


def _stack(gaussians):
    return (np.stack([g.mean for g in gaussians]), np.stack([g.factor for g in gaussians]))


def _draw_from(means, factors, centers, rng):
    eps = rng.standard_normal((centers.shape[0], means.shape[1]))
    return means[centers] + np.einsum("nij,nj->ni", factors[centers], eps)


def mgs_draw(gaussians, rng, size=None):
    """Sample the equal-weight mixture of the local Gaussians.

    Returns ``(points, centers)``; a single point when ``size`` is None.
    """
    means, factors = _stack(gaussians)
    m = 1 if size is None else int(size)
    centers = rng.integers(0, len(gaussians), size=m)
    z = _draw_from(means, factors, centers, rng)
    if size is None:
        return z[0], int(centers[0])
    return z, centers


def class_weights(ds):
    """Balanced inverse-frequency weights ``{0: N/(2(N-n)), 1: N/(2n)}``."""
    n = ds.n_minority
    N = ds.n_rows
    if n == 0 or n == N:
        raise SamplerError("class weights need both classes")
    return {0: N / (2.0 * (N - n)), 1: N / (2.0 * n)}


# ---------------------------------------------------------------------------
# strategies

def _require(ds, need, what):
    if ds.n_minority < need:
        raise SamplerError(f"{what} needs at least {need} minority rows, got {ds.n_minority}")


def _augment(ds, cont, cat, provenance):
    m = cat.shape[0] if cat is not None else cont.shape[0]
    if cont is None:
        cont = np.empty((m, 0))
    if cat is None:
        cat = np.empty((m, 0), dtype=np.int64)
    synth = MixedDataset(cont, cat, np.ones(m, dtype=np.int64), ds.cardinalities,
                         ds.continuous_names, ds.categorical_names)
    out = concat(ds, synth)
    mask = np.zeros(out.n_rows, dtype=bool)
    mask[ds.n_rows:] = True
    prov = {key: np.full(m, -1, dtype=np.int64) for key in ("center", "neighbor", "draw")}
    prov.update({k: np.asarray(v, dtype=np.int64) for k, v in provenance.items()})
    return ResampleResult(out, mask, provenance=prov)


def _n_generate(ds):
    n = ds.n_minority
    if n == 0:
        raise SamplerError("dataset has no minority rows")
    return max(0, ds.n_rows - 2 * n)


def _smote_like(ds, rng, metric_kind, K, cont_mode):
    """Shared loop of SMOTE, SMOTE-N and SMOTE-NC."""
    m = _n_generate(ds)
    mi = ds.minority_index
    mc, mk = ds.continuous[mi], ds.categorical[mi]
    _require(ds, K + 1, f"{metric_kind} neighbourhoods with K={K}")
    if metric_kind == "L2":
        metric = geometry.L2
    elif metric_kind == "NC":
        metric = geometry.nc_metric(geometry.nc_scale(mc))
    else:
        metric = geometry.vdm_metric(geometry.fit_vdm(ds.categorical, ds.labels, ds.cardinalities))
    nn = geometry.knn_all(metric, mc, mk, K, include_self=False)
    centers = rng.integers(0, mi.size, size=m)
    cont = cat = None
    prov = {"center": mi[centers]}
    if cont_mode:
        pick = rng.integers(0, K, size=m)
        chosen = nn[centers, pick]
        w = rng.random(m)[:, None]
        cont = smote_continuous(mc[centers], mc[chosen], w)
        prov["neighbor"] = mi[chosen]
    if ds.p and metric_kind != "L2":
        cat = _vote_batch(mk, nn[centers], ds.cardinalities)
    return _augment(ds, cont, cat, prov)


def resample_smote(ds, rng, K=SMOTE_K):
    if ds.d == 0:
        raise SamplerError("SMOTE needs continuous features")
    if ds.p:
        raise SamplerError("SMOTE is undefined with categorical features; use smote-nc")
    return _smote_like(ds, rng, "L2", K, True)


def resample_smote_n(ds, rng, K=SMOTE_K):
    if ds.p == 0 or ds.d:
        raise SamplerError("SMOTE-N handles categorical-only data; use smote-nc for mixed data")
    return _smote_like(ds, rng, "VDM", K, False)


def resample_smote_nc(ds, rng, K=SMOTE_K):
    if ds.d == 0:
        raise SamplerError("SMOTE-NC needs continuous features; use smote-n")
    return _smote_like(ds, rng, "NC", K, True)


def _mgs_setup(ds, K, metric=None):
    if ds.d == 0:
        raise SamplerError("MGS strategies need at least one continuous feature")
    K = ds.d + 1 if K is None else K
    _require(ds, K, f"MGS with K={K}")
    mi = ds.minority_index
    mc, mk = ds.continuous[mi], ds.categorical[mi]
    nn = geometry.knn_all(metric or geometry.L2, mc, mk, K, include_self=True)
    means, _, factors, _ = local_gaussians(mc, nn)
    return mi, mc, mk, nn, means, factors


def resample_mgs(ds, rng, K=None):
    if ds.p:
        raise SamplerError("plain MGS handles continuous-only data; use mgs-grf or mgs-nc")
    mi, _, _, _, means, factors = _mgs_setup(ds, K)
    m = _n_generate(ds)
    centers = rng.integers(0, mi.size, size=m)
    z = _draw_from(means, factors, centers, rng)
    return _augment(ds, z, None, {"center": mi[centers]})


def resample_mgs_nc(ds, rng, K=None):
    if ds.d == 0:
        raise SamplerError("MGS-NC needs continuous features")
    mi = ds.minority_index
    metric = geometry.nc_metric(geometry.nc_scale(ds.continuous[mi]))
    mi, mc, mk, nn, means, factors = _mgs_setup(ds, K, metric)
    m = _n_generate(ds)
    centers = rng.integers(0, mi.size, size=m)
    z = _draw_from(means, factors, centers, rng)
    cat = _vote_batch(mk, nn[centers], ds.cardinalities) if ds.p else None
    return _augment(ds, z, cat, {"center": mi[centers]})


def resample_mgs_knn(ds, k, rng, K=None):
    """MGS continuous draws; categorical block voted by the ``k`` nearest minority rows."""
    if ds.p == 0:
        raise SamplerError("MGS-kNN needs categorical features; use mgs")
    if ds.n_minority < k:
        raise SamplerError(f"MGS-{k}NN needs at least {k} minority rows, got {ds.n_minority}")
    mi, mc, mk, _, means, factors = _mgs_setup(ds, K)
    m = _n_generate(ds)
    centers = rng.integers(0, mi.size, size=m)
    z = _draw_from(means, factors, centers, rng)
    nn = geometry.knn_query(geometry.L2, mc, None, z, None, k) if m else np.empty((0, k), dtype=np.int64)
    cat = _vote_batch(mk, nn, ds.cardinalities)
    prov = {"center": mi[centers]}
    if k == 1:
        prov["draw"] = mi[nn[:, 0]]
    return _augment(ds, z, cat, prov)


def resample_mgs_grf(ds, rng, K=None, n_trees=100, max_features="sqrt", leaf_mode="all"):
    """MGS continuous draws; categorical vectors copied from GRF-weighted minority rows."""
    if ds.p == 0:
        raise SamplerError("MGS-GRF needs categorical features; use mgs")
    if ds.d and ds.n_minority < ds.d + 2:
        raise SamplerError(f"MGS-GRF needs at least d+2 = {ds.d + 2} minority rows, "
                           f"got {ds.n_minority}; reduce the continuous dimension or add minority rows")
    mi, mc, mk, _, means, factors = _mgs_setup(ds, K)
    if mi.size < 2:
        raise SamplerError("MGS-GRF needs at least 2 minority rows")
    m = _n_generate(ds)
    centers = rng.integers(0, mi.size, size=m)
    z = _draw_from(means, factors, centers, rng)
    forest = grf_fit(mc, mk, n_trees, rng, max_features, leaf_mode=leaf_mode)
    drawn = grf_sample_index(forest, z, rng) if m else np.empty(0, dtype=np.int64)
    return _augment(ds, z, mk[drawn], {"center": mi[centers], "draw": mi[drawn]})


def resample_ros(ds, rng):
    m = _n_generate(ds)
    mi = ds.minority_index
    pick = mi[rng.integers(0, mi.size, size=m)]
    res = _augment(ds, ds.continuous[pick], ds.categorical[pick], {"center": pick})
    return res


def resample_rus(ds, rng):
    n = ds.n_minority
    if n == 0:
        raise SamplerError("dataset has no minority rows")
    majority = np.flatnonzero(ds.labels == 0)
    keep_maj = rng.choice(majority, size=min(n, majority.size), replace=False)
    keep = np.sort(np.concatenate([ds.minority_index, keep_maj]))
    out = ds.take(keep)
    res = ResampleResult(out, np.zeros(out.n_rows, dtype=bool))
    res.provenance = {"kept": keep}
    return res


def resample(kind, ds, rng):
    """Apply the strategy ``kind`` (a :class:`SamplerKind` or a name) to ``ds``.

    Original rows come first and are untouched; synthetic rows are appended
    with label 1 until both classes have the same count (``rus`` instead
    drops majority rows; ``none`` and ``cw`` leave rows as they are).
    """
    if isinstance(kind, str):
        kind = SamplerKind.parse(kind)
    name = kind.name
    if name == "none":
        return ResampleResult(ds, np.zeros(ds.n_rows, dtype=bool))
    if name == "cw":
        w = class_weights(ds)
        return ResampleResult(ds, np.zeros(ds.n_rows, dtype=bool),
                              sample_weights=np.where(ds.labels == 1, w[1], w[0]))
    if name == "ros":
        return resample_ros(ds, rng)
    if name == "rus":
        return resample_rus(ds, rng)
    K = kind.k_neighbors
    if name == "smote":
        return resample_smote(ds, rng, K or SMOTE_K)
    if name == "smote-n":
        return resample_smote_n(ds, rng, K or SMOTE_K)
    if name == "smote-nc":
        return resample_smote_nc(ds, rng, K or SMOTE_K)
    if name == "mgs":
        return resample_mgs(ds, rng, K)
    if name == "mgs-nc":
        return resample_mgs_nc(ds, rng, K)
    if name == "mgs-knn":
        return resample_mgs_knn(ds, kind.knn_k, rng, K)
    return resample_mgs_grf(ds, rng, K, kind.n_trees, kind.max_features, kind.leaf_mode)
