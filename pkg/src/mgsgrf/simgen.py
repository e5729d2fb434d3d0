"""Simulated mixed-feature datasets with known generating mechanisms.

Two generators are provided.

``coherence``: ``d`` standard normal features, a pair of categorical
columns with ``m`` modalities each drawn jointly from a softmax over the
``m*m`` combinations with logits ``-theta_c . x[:3]``, and a label drawn from
``sigmoid(alpha . x[:3] + gamma_c)``. Only ``m`` combinations get a high
``gamma_c``, so the minority class concentrates on them.

``association``: three informative features from a three-component Gaussian
mixture with latent component ``W``, ``d - 3`` Gaussian noise features, one
categorical column with three modalities drawn from a softmax with logits
``-zeta_c . x[:3] + chi[W, c]``, and a label drawn from
``sigmoid(beta . x[:3] + eta[W] + phi[Z])``.

Parameter values are produced by a seeded recipe (:func:`default_params`).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit, logsumexp, softmax
from scipy.stats import multivariate_normal

from .data import MixedDataset

ASSOCIATION_DIMS = (5, 10, 20, 30, 50, 100, 150, 200)
N_COHERENCE_CONFIGS = 6
PILOT_ROWS = 100_000

# coherence recipe
ALPHA_NORM = 2.0
GAMMA_GAP = 8.0
COHERENCE_TARGET = 0.05
MIN_VOTE_MIXING = 0.1
VOTE_SIZE = 5
# association recipe
MIXTURE_WEIGHTS = (0.45, 0.45, 0.10)
MEAN_SPREAD = 4.0
CHI_PEAK = 3.0
NOISE_VARIANCE = 2.0
ASSOCIATION_TARGET = 0.08


def _as_list(v):
    return np.asarray(v).tolist()


@dataclass(frozen=True, eq=False)
class CoherenceSimParams:
    """Parameters of the coherence protocol.

    ``theta`` has shape ``(m*m, 3)`` and ``gamma`` shape ``(m*m,)``;
    combination ``c`` encodes the modality pair ``(c // m, c % m)``.
    ``coherent`` lists the ``m`` combinations with the high ``gamma``.
    """

    theta: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    coherent: tuple
    m: int = 4
    d: int = 9
    n_samples: int = 5000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64).reshape(-1, 3))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64).reshape(3))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "coherent", tuple(int(c) for c in self.coherent))
        k = self.m * self.m
        if self.theta.shape[0] != k or self.gamma.shape[0] != k:
            raise ValueError(f"theta and gamma need {k} entries for m={self.m}")
        if len(set(self.coherent)) != self.m or not all(0 <= c < k for c in self.coherent):
            raise ValueError(f"exactly {self.m} distinct coherent combinations expected")
        if self.d < 3:
            raise ValueError("coherence protocol needs d >= 3")

    def to_dict(self):
        out = {k: _as_list(v) if isinstance(v, np.ndarray) else v for k, v in asdict(self).items()}
        out["coherent"] = list(self.coherent)
        return {"kind": "coherence", **out}


@dataclass(frozen=True, eq=False)
class AssociationSimParams:
    """Parameters of the association protocol.

    ``pi`` (3,), ``mu`` (3, 3), ``sigma`` (3, 3, 3) describe the mixture;
    ``zeta`` (3, 3) holds one row per modality, ``chi`` (3, 3) is indexed
    ``[w, c]``. Noise features have mean ``mu[1]`` repeated cyclically and
    variance ``lam``.
    """

    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    lam: float
    zeta: np.ndarray
    chi: np.ndarray
    beta: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    d: int = 5
    n_samples: int = 5000
    seed: int = 0

    def __post_init__(self):
        shapes = {"pi": (3,), "mu": (3, 3), "sigma": (3, 3, 3), "zeta": (3, 3),
                  "chi": (3, 3), "beta": (3,), "eta": (3,), "phi": (3,)}
        for name, shape in shapes.items():
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(shape))
        if np.any(self.pi < 0) or not np.isclose(self.pi.sum(), 1.0, atol=1e-9):
            raise ValueError("mixture weights must be non-negative and sum to 1")
        if self.d < 4:
            raise ValueError("association protocol needs d >= 4")
        if not self.lam >= 0:
            raise ValueError("noise variance must be non-negative")

    @property
    def noise_mean(self):
        return np.resize(self.mu[1], self.d - 3)

    def with_dimension(self, d):
        return AssociationSimParams(**{**self._fields(), "d": int(d)})

    def _fields(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_dict(self):
        out = {k: _as_list(v) if isinstance(v, np.ndarray) else v for k, v in self._fields().items()}
        return {"kind": "association", **out}


def params_from_dict(spec):
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "coherence":
        return CoherenceSimParams(**spec)
    if kind == "association":
        return AssociationSimParams(**spec)
    raise ValueError(f"unknown simulation kind {kind!r}")


# ---------------------------------------------------------------------------
# coherence protocol

def _combo_probs(theta, x3):
    return softmax(-x3 @ theta.T, axis=1)


def gen_coherence(params, rng=None):
    """Draw one dataset of the coherence protocol.

    Columns are ``x0..x{d-1}``, ``c0``, ``c1`` and the label.
    """
    if not np.any(params.alpha) and np.ptp(params.gamma) == 0:
        warnings.warn("alpha is zero and gamma constant: labels do not depend on the features",
                      RuntimeWarning, stacklevel=2)
    rng = np.random.default_rng(params.seed if rng is None else rng)
    n, d, m = params.n_samples, params.d, params.m
    X = rng.standard_normal((n, d))
    probs = _combo_probs(params.theta, X[:, :3])
    u = rng.random(n)
    combo = (np.cumsum(probs, axis=1) <= u[:, None]).sum(axis=1)
    combo = np.minimum(combo, m * m - 1)
    logit = X[:, :3] @ params.alpha + params.gamma[combo]
    y = (rng.random(n) < expit(logit)).astype(np.int64)
    cat = np.column_stack([combo // m, combo % m])
    return MixedDataset(X, cat, y, (m, m), tuple(f"x{j}" for j in range(d)), ("c0", "c1"))


def _coherence_fraction(theta, alpha, coherent_mask, x3, probs, g):
    gamma = np.where(coherent_mask, g, g - GAMMA_GAP)
    return float(np.mean(np.sum(probs * expit((x3 @ alpha)[:, None] + gamma[None, :]), axis=1)))


def _bisect(f, target, lo, hi, what, tol=1e-6):
    flo, fhi = f(lo), f(hi)
    if not (flo <= target <= fhi):
        raise ValueError(f"cannot calibrate {what}: achievable fraction range "
                         f"[{flo:.4f}, {fhi:.4f}] misses target {target}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def vote_mixing(combos, m, K=VOTE_SIZE):
    """Share of size-``K`` multisets of ``combos`` whose per-column vote leaves the set.

    Sets closed under voting (e.g. Cartesian products) cannot expose
    incoherent generators, so the recipe rejects them.
    """
    pairs = [(int(c) // m, int(c) % m) for c in combos]
    members = set(pairs)
    outside = total = 0
    for pick in itertools.combinations_with_replacement(range(len(pairs)), K):
        rows = np.array([pairs[i] for i in pick])
        voted = tuple(int(np.argmax(np.bincount(rows[:, j]))) for j in range(2))
        outside += voted not in members
        total += 1
    return outside / total


def coherence_params(config_index=1, seed=0, m=4, d=9, n_samples=5000, target=COHERENCE_TARGET):
    rng = np.random.default_rng([int(seed), int(config_index), 1])
    k = m * m
    theta = rng.standard_normal((k, 3))
    alpha = rng.standard_normal(3)
    alpha *= ALPHA_NORM / np.linalg.norm(alpha)
    while True:
        coherent = np.sort(rng.choice(k, size=m, replace=False))
        if vote_mixing(coherent, m) >= MIN_VOTE_MIXING:
            break
    mask = np.zeros(k, dtype=bool)
    mask[coherent] = True
    x3 = rng.standard_normal((PILOT_ROWS, 3))
    probs = _combo_probs(theta, x3)
    g = _bisect(lambda g: _coherence_fraction(theta, alpha, mask, x3, probs, g),
                target, -40.0, 40.0, "coherence gamma")
    gamma = np.where(mask, g, g - GAMMA_GAP)
    return CoherenceSimParams(theta, alpha, gamma, tuple(coherent.tolist()), m, d, n_samples, seed)


# ---------------------------------------------------------------------------
# association protocol

def _mixture_draw(params, n, rng):
    W = rng.choice(3, size=n, p=params.pi)
    X3 = np.empty((n, 3))
    for w in range(3):
        idx = np.flatnonzero(W == w)
        if idx.size:
            X3[idx] = rng.multivariate_normal(params.mu[w], params.sigma[w], size=idx.size,
                                              method="cholesky")
    return X3, W


def _modality_probs(params, X3, W):
    return softmax(-X3 @ params.zeta.T + params.chi[W], axis=1)


def gen_association(params, rng=None):
    """Draw one dataset of the association protocol.

    Returns ``(dataset, W)``; the latent mixture component ``W`` is not part
    of the dataset.
    """
    rng = np.random.default_rng(params.seed if rng is None else rng)
    n, d = params.n_samples, params.d
    X3, W = _mixture_draw(params, n, rng)
    noise = params.noise_mean + np.sqrt(params.lam) * rng.standard_normal((n, d - 3))
    probs = _modality_probs(params, X3, W)
    u = rng.random(n)
    Z = np.minimum((np.cumsum(probs, axis=1) <= u[:, None]).sum(axis=1), 2)
    logit = X3 @ params.beta + params.eta[W] + params.phi[Z]
    y = (rng.random(n) < expit(logit)).astype(np.int64)
    X = np.hstack([X3, noise])
    ds = MixedDataset(X, Z[:, None], y, (3,), tuple(f"x{j}" for j in range(d)), ("z",))
    return ds, W


def posterior_w(params, X3):
    """``P(W = w | x[:3])`` under the mixture, shape (n, 3)."""
    X3 = np.atleast_2d(X3)
    with np.errstate(divide="ignore"):
        logp = np.column_stack([
            np.log(params.pi[w]) + multivariate_normal(params.mu[w], params.sigma[w]).logpdf(X3).reshape(-1)
            for w in range(3)])
    return np.exp(logp - logsumexp(logp, axis=1, keepdims=True))


def modality_posterior(params, X3):
    """``P(Z = c | x[:3])``, shape (n, 3)."""
    X3 = np.atleast_2d(np.asarray(X3, dtype=np.float64))
    post = posterior_w(params, X3)
    out = np.zeros((X3.shape[0], 3))
    for w in range(3):
        out += post[:, [w]] * softmax(-X3 @ params.zeta.T + params.chi[w], axis=1)
    return out


def bayes_categorical(params, x):
    """Bayes prediction of the modality from the continuous features.

    Accepts a single row or a matrix; only the first three columns are
    used. Ties go to the smaller modality code.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    probs = modality_posterior(params, np.atleast_2d(x)[:, :3])
    pred = np.argmax(probs, axis=1)
    return int(pred[0]) if single else pred


def association_params(seed=0, d=5, n_samples=5000, pi=MIXTURE_WEIGHTS, lam=NOISE_VARIANCE,
                       target=ASSOCIATION_TARGET):
    rng = np.random.default_rng([int(seed), 0, 2])
    pi = np.asarray(pi, dtype=np.float64)
    mu = MEAN_SPREAD * np.eye(3) + 0.25 * rng.standard_normal((3, 3))
    sigma = np.empty((3, 3, 3))
    for w in range(3):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        sigma[w] = q @ np.diag(rng.uniform(0.5, 1.5, size=3)) @ q.T
        sigma[w] = 0.5 * (sigma[w] + sigma[w].T)
    zeta = 0.3 * rng.standard_normal((3, 3))
    chi = CHI_PEAK * np.eye(3)
    beta = rng.standard_normal(3)
    beta /= np.linalg.norm(beta)
    eta0 = 0.5 * rng.standard_normal(3)
    phi = 0.5 * rng.standard_normal(3)

    base = AssociationSimParams(pi, mu, sigma, lam, zeta, chi, beta, eta0, phi, d, n_samples, seed)
    X3, W = _mixture_draw(base, PILOT_ROWS, rng)
    pz = _modality_probs(base, X3, W)
    lin = X3 @ beta + eta0[W]

    def fraction(shift):
        return float(np.mean(np.sum(pz * expit(lin[:, None] + shift + phi[None, :]), axis=1)))

    shift = _bisect(fraction, target, -40.0, 40.0, "association intercept")
    return AssociationSimParams(pi, mu, sigma, lam, zeta, chi, beta, eta0 + shift, phi, d, n_samples, seed)


def default_params(kind, config_index=1, seed=0, **overrides):
    """Deterministic parameters for a protocol.

    ``config_index`` runs over ``1..6`` for ``coherence`` and over the
    dimension list ``5, 10, ..., 200`` (1-based) for ``association``; all
    association dimensions share the same remaining parameters.
    """
    if kind == "coherence":
        if not 1 <= config_index <= N_COHERENCE_CONFIGS:
            raise ValueError(f"coherence config_index must be in 1..{N_COHERENCE_CONFIGS}")
        return coherence_params(config_index, seed, **overrides)
    if kind == "association":
        if not 1 <= config_index <= len(ASSOCIATION_DIMS):
            raise ValueError(f"association config_index must be in 1..{len(ASSOCIATION_DIMS)}")
        overrides.setdefault("d", ASSOCIATION_DIMS[config_index - 1])
        return association_params(seed, **overrides)
    raise ValueError(f"unknown simulation kind {kind!r}")


def generate(params, rng=None):
    """Dispatch to the generator matching ``params``; returns a dataset."""
    if isinstance(params, CoherenceSimParams):
        return gen_coherence(params, rng)
    return gen_association(params, rng)[0]
