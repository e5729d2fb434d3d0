import numpy as np
import pytest
from scipy import stats

from mgsgrf.data import MixedDataset
from mgsgrf.metrics import CombinationSet, coherence
from mgsgrf.samplers import (LocalGaussian, SamplerError, SamplerKind, categorical_vote, class_weights,
                             fit_mgs, local_gaussians, mgs_draw, resample, smote_continuous)

from conftest import make_mixed


def _cont_only(n_major=90, n_minor=10, d=2, seed=0):
    return make_mixed(n_major, n_minor, d=d, cards=(), seed=seed)


def test_parse_names():
    assert SamplerKind.parse("MGS_GRF").name == "mgs-grf"
    assert SamplerKind.parse("mgs-5nn").knn_k == 5
    assert SamplerKind.parse("mgs-knn:3").label == "mgs-3nn"
    with pytest.raises(ValueError):
        SamplerKind.parse("bogus")


def test_none_is_identity(mixed, rng):
    res = resample("none", mixed, rng)
    assert res.dataset.equals(mixed) and res.n_synthetic == 0


def test_ros_duplicates():
    ds = make_mixed(90, 10)
    res = resample("ros", ds, np.random.default_rng(0))
    assert res.n_synthetic == 80 and res.dataset.n_rows == 2 * 90
    orig = {tuple(ds.continuous[i]) + tuple(ds.categorical[i]) for i in ds.minority_index}
    out = res.dataset
    for i in np.flatnonzero(res.synthetic_mask):
        assert tuple(out.continuous[i]) + tuple(out.categorical[i]) in orig


def test_rus():
    ds = make_mixed(90, 10)
    res = resample("rus", ds, np.random.default_rng(0))
    out = res.dataset
    assert out.n_rows == 20 and out.n_minority == 10
    kept = res.provenance["kept"]
    assert len(set(kept.tolist())) == 20


def test_originals_first(mixed, rng):
    for name in ("smote-nc", "mgs-grf", "mgs-nc", "mgs-1nn"):
        res = resample(name, mixed, rng)
        assert res.dataset.take(np.arange(mixed.n_rows)).equals(mixed)
        assert res.dataset.n_minority * 2 == res.dataset.n_rows
        assert not res.synthetic_mask[:mixed.n_rows].any()


def test_cw_weights_hand():
    ds = make_mixed(90, 10)
    w = class_weights(ds)
    assert w[1] == pytest.approx(5.0) and w[0] == pytest.approx(5.0 / 9.0)
    res = resample("cw", ds, None)
    assert res.sample_weights[ds.labels == 1].sum() == pytest.approx(res.sample_weights[ds.labels == 0].sum())


def test_cw_balanced_and_invariant():
    w = class_weights(make_mixed(10, 10))
    assert w == {0: 1.0, 1: 1.0}
    for seed in range(5):
        ds = make_mixed(50 + 7 * seed, 5 + seed, seed=seed)
        w = class_weights(ds)
        n = ds.n_minority
        assert n * w[1] == pytest.approx((ds.n_rows - n) * w[0])


def test_smote_segment():
    assert smote_continuous([0, 0], [2, 4], 0.5).tolist() == [1.0, 2.0]
    c, nb = np.array([1.5, -2.0]), np.array([0.3, 7.0])
    assert np.array_equal(smote_continuous(c, nb, 0.0), c)
    assert np.array_equal(smote_continuous(c, nb, 1.0), nb)


def test_smote_points_on_segments():
    ds = _cont_only()
    res = resample("smote", ds, np.random.default_rng(0))
    prov = res.provenance
    for k, i in enumerate(np.flatnonzero(res.synthetic_mask)):
        a, b = ds.continuous[prov["center"][k]], ds.continuous[prov["neighbor"][k]]
        x = res.dataset.continuous[i]
        w = np.dot(x - a, b - a) / np.dot(b - a, b - a)
        assert -1e-12 <= w <= 1 + 1e-12
        assert np.allclose(a + w * (b - a), x)


def test_vote_rules():
    A, B = 0, 1
    assert categorical_vote([[A], [A], [B]], 0) == A
    assert categorical_vote([[B], [A]], 0) == A
    assert categorical_vote([[B]] * 5, 0) == B
    # combos (A,2), (B,1), (A,1): column votes give A and 1
    assert categorical_vote([[A, 2], [B, 1], [A, 1]]).tolist() == [A, 1]


def test_smote_nc_can_be_incoherent():
    # the vote over the four other rows of row 4 yields (0, 1), not a minority combo
    cat = np.array([[0, 0], [0, 2], [1, 1], [2, 1], [3, 3]] + [[0, 0]] * 15)
    y = np.r_[np.ones(5, int), np.zeros(15, int)]
    X = np.random.default_rng(0).standard_normal((20, 2))
    ds = MixedDataset(X, cat, y, (4, 4))
    res = resample(SamplerKind("smote-nc", k_neighbors=4), ds, np.random.default_rng(0))
    assert coherence(res.synthetic_categorical, CombinationSet.of_class(ds)) < 1.0


def test_refusals(mixed, rng):
    with pytest.raises(SamplerError, match="smote-nc"):
        resample("smote", mixed, rng)
    with pytest.raises(SamplerError):
        resample("smote-n", mixed, rng)
    with pytest.raises(SamplerError):
        resample("mgs", mixed, rng)
    small = make_mixed(30, 4)
    with pytest.raises(SamplerError, match="minority rows"):
        resample("mgs-5nn", small, rng)
    with pytest.raises(SamplerError):
        resample("smote-nc", make_mixed(30, 0), rng)


def test_mgs_grf_needs_d_plus_2(rng):
    with pytest.raises(SamplerError, match="d\\+2"):
        resample("mgs-grf", make_mixed(30, 4, d=3), rng)
    assert resample("mgs-grf", make_mixed(30, 5, d=3), rng).n_synthetic == 25


def test_smote_n_on_categorical_only(rng):
    ds = make_mixed(60, 12, d=0, cards=(3, 3))
    res = resample("smote-n", ds, rng)
    assert res.n_synthetic == 48 and res.dataset.d == 0


def test_local_gaussian_hand():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    means, covs, _, _ = local_gaussians(X, np.array([[0, 1]]))
    assert means[0].tolist() == [1.0, 0.0]
    assert np.array_equal(covs[0], np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_fit_mgs_mean_is_neighbour_mean():
    X = np.random.default_rng(0).standard_normal((15, 3))
    gs = fit_mgs(X)
    from mgsgrf.geometry import L2, knn
    for g in gs:
        nb = knn(L2, X, None, g.center, 4, include_self=True)
        assert nb[0] == g.center
        assert np.allclose(g.mean, X[nb].sum(axis=0) / 4)
        assert np.allclose(g.factor @ g.factor.T, g.cov + g.ridge * np.eye(3))


def test_degenerate_cluster():
    X = np.tile([[1.0, -2.0]], (3, 1))
    gs = fit_mgs(X)
    assert np.array_equal(gs[0].cov, np.zeros((2, 2)))
    pts, _ = mgs_draw(gs, np.random.default_rng(0), 1000)
    assert np.abs(pts - [1.0, -2.0]).max() < 1e-4


def test_mgs_draw_single_point_api():
    gs = fit_mgs(np.random.default_rng(0).standard_normal((5, 2)))
    z, c = mgs_draw(gs, np.random.default_rng(1))
    assert z.shape == (2,) and 0 <= c < 5


def test_mgs_moments():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3))
    cov = A @ A.T + 0.5 * np.eye(3)
    g = LocalGaussian(0, np.array([1.0, -1.0, 2.0]), cov, np.linalg.cholesky(cov), 0.0)
    pts, _ = mgs_draw([g], rng, 100_000)
    se = np.sqrt(np.diag(cov) / pts.shape[0])
    assert np.all(np.abs(pts.mean(axis=0) - g.mean) < 4 * se)
    emp = np.cov(pts.T, bias=True)
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) < 0.05


def test_mgs_center_uniform():
    gs = fit_mgs(np.random.default_rng(0).standard_normal((8, 2)))
    _, centers = mgs_draw(gs, np.random.default_rng(3), 100_000)
    counts = np.bincount(centers, minlength=8)
    assert stats.chisquare(counts).pvalue > 0.01


def test_mgs_zero_cov_mixture_hits_means():
    X = np.repeat(np.array([[0.0, 0.0], [5.0, 5.0]]), 3, axis=0)
    gs = fit_mgs(X)
    pts, _ = mgs_draw(gs, np.random.default_rng(0), 200)
    means = np.stack([g.mean for g in gs])
    assert np.all(np.min(np.abs(pts[:, None, :] - means[None]).max(axis=2), axis=1) < 1e-4)


@pytest.mark.parametrize("name", ["mgs-grf", "mgs-1nn", "ros"])
def test_coherent_strategies(name):
    for seed in range(3):
        ds = make_mixed(100, 20, seed=seed)
        res = resample(name, ds, np.random.default_rng(seed))
        assert coherence(res.synthetic_categorical, CombinationSet.of_class(ds)) == 1.0


def test_mgs_grf_single_combo():
    ds = make_mixed(60, 10)
    cat = ds.categorical.copy()
    cat[ds.labels == 1] = [2, 1]
    ds = MixedDataset(ds.continuous, cat, ds.labels, ds.cardinalities)
    res = resample("mgs-grf", ds, np.random.default_rng(0))
    assert np.all(res.synthetic_categorical == [2, 1])


def test_mgs_grf_deterministic(mixed):
    a = resample("mgs-grf", mixed, np.random.default_rng(9))
    b = resample("mgs-grf", mixed, np.random.default_rng(9))
    assert a.dataset.equals(b.dataset)
    assert all(np.array_equal(a.provenance[k], b.provenance[k]) for k in a.provenance)


def test_mgs_grf_provenance_points_at_minority(mixed):
    res = resample("mgs-grf", mixed, np.random.default_rng(0))
    draw = res.provenance["draw"]
    assert np.all(mixed.labels[draw] == 1)
    assert np.array_equal(mixed.categorical[draw], res.synthetic_categorical)
