"""Reference classifier and the repeated cross-validation benchmark."""

from __future__ import annotations

import logging
import math
import time
import zlib
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.ensemble import HistGradientBoostingClassifier
from sklearn.model_selection import StratifiedKFold

from .data import MixedDataset, apply_scaler, fit_scaler
from .metrics import CombinationSet, coherence, pr_auc, pr_curve, precision_at_recall, roc_auc, roc_curve
from .samplers import SamplerKind, resample

logger = logging.getLogger(__name__)

MAX_ONEHOT = 64
GBDT_DEFAULTS = {
    "max_iter": 100,
    "learning_rate": 0.1,
    "max_leaf_nodes": 31,
    "max_bins": 255,
    "min_samples_leaf": 20,
    "l2_regularization": 0.0,
}


class GbdtModel:
    """Gradient-boosted trees on logistic loss over one-hot encoded features.

    Categorical columns with at most ``MAX_ONEHOT`` modalities are expanded
    into indicator columns; wider ones are passed as their integer code.
    """

    def __init__(self, cardinalities, estimator):
        self.cardinalities = tuple(cardinalities)
        self.estimator = estimator

    def encode(self, ds):
        return encode_features(ds, self.cardinalities)

    def decision_function(self, ds):
        return self.estimator.decision_function(self.encode(ds))

    def predict_proba(self, ds):
        """Probability of label 1 for every row of ``ds``."""
        return self.estimator.predict_proba(self.encode(ds))[:, 1]


def encode_features(ds, cardinalities=None):
    cardinalities = ds.cardinalities if cardinalities is None else cardinalities
    blocks = [ds.continuous]
    for j, m in enumerate(cardinalities):
        codes = ds.categorical[:, j]
        if m <= MAX_ONEHOT:
            blocks.append((codes[:, None] == np.arange(m)[None, :]).astype(np.float64))
        else:
            blocks.append(codes[:, None].astype(np.float64))
    return np.hstack(blocks) if blocks else np.empty((ds.n_rows, 0))


def gbdt_fit(train, sample_weights=None, hyperparams=None, rng=None):
    """Fit the reference classifier; raises if ``train`` holds a single class."""
    if train.n_minority in (0, train.n_rows):
        raise ValueError("classifier needs both classes in the training data")
    params = {**GBDT_DEFAULTS, **(hyperparams or {})}
    seed = int(np.random.default_rng(rng).integers(0, 2**31 - 1))
    est = HistGradientBoostingClassifier(loss="log_loss", early_stopping=False,
                                         random_state=seed, **params)
    est.fit(encode_features(train), train.labels, sample_weight=sample_weights)
    return GbdtModel(train.cardinalities, est)


# ---------------------------------------------------------------------------
# benchmark

@dataclass
class BenchmarkPlan:
    """What to run.

    ``strategies`` holds names understood by :meth:`SamplerKind.parse` or
    :class:`SamplerKind` instances. Cell seeds derive from
    ``(seed, repeat, fold, crc32(strategy label))``.
    """

    dataset: MixedDataset
    strategies: list
    repeats: int = 20
    folds: int = 5
    seed: int = 0
    recall_threshold: float = 0.2
    n_jobs: int = 1
    hyperparams: dict = None
    keep_scores: bool = False

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.repeats < 1:
            raise ValueError("need at least 1 repeat")
        self.strategies = [s if isinstance(s, SamplerKind) else SamplerKind.parse(s)
                           for s in self.strategies]
        labels = [s.label for s in self.strategies]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate strategies in plan")


@dataclass
class MetricReport:
    strategy: str
    repeat: int
    fold: int
    seed: int
    status: str = "ok"
    error: str = ""
    pr_auc: float = math.nan
    roc_auc: float = math.nan
    pr_at_rec: float = math.nan
    coherence: float = math.nan
    n_train: int = 0
    n_synthetic: int = 0
    time_resample: float = math.nan
    time_fit: float = math.nan
    scores: np.ndarray = field(default=None, repr=False)
    test_labels: np.ndarray = field(default=None, repr=False)
    test_rows: np.ndarray = field(default=None, repr=False)

    @property
    def time(self):
        return self.time_resample + self.time_fit


METRIC_FIELDS = ("pr_auc", "roc_auc", "pr_at_rec", "coherence")


@dataclass
class BenchmarkResult:
    plan: BenchmarkPlan
    cells: list

    def aggregate(self):
        """Mean and standard deviation of every metric per strategy (ok cells only)."""
        out = {}
        for kind in self.plan.strategies:
            rows = [c for c in self.cells if c.strategy == kind.label and c.status == "ok"]
            block = {"n_cells": len([c for c in self.cells if c.strategy == kind.label]),
                     "n_failed": len([c for c in self.cells if c.strategy == kind.label and c.status != "ok"])}
            for f in METRIC_FIELDS + ("time",):
                vals = np.array([getattr(c, f) for c in rows], dtype=np.float64)
                block[f] = {"mean": float(vals.mean()) if vals.size else math.nan,
                            "std": float(vals.std()) if vals.size else math.nan}
            out[kind.label] = block
        return out

    def mean(self, strategy, metric="pr_auc"):
        return self.aggregate()[strategy][metric]["mean"]


def cell_seed(master, repeat, fold, label):
    ss = np.random.SeedSequence([int(master), int(repeat), int(fold), zlib.crc32(label.encode())])
    return int(ss.generate_state(1)[0])


def stratified_folds(labels, folds, seed, repeat):
    skf = StratifiedKFold(n_splits=folds, shuffle=True,
                          random_state=cell_seed(seed, repeat, 2**31, "split") % (2**31 - 1))
    return list(skf.split(np.zeros(len(labels)), labels))


def _coherence_of(result, train):
    if result.n_synthetic == 0:
        return 1.0
    return coherence(result.synthetic_categorical, CombinationSet.of_class(train))


def run_cell(dataset, kind, train_idx, test_idx, repeat, fold, seed, recall_threshold,
             hyperparams=None, keep_scores=False):
    """Scale, resample, fit and score one (strategy, repeat, fold) cell."""
    rep = MetricReport(kind.label, repeat, fold, seed)
    rng = np.random.default_rng(seed)
    train = dataset.take(train_idx)
    test = dataset.take(test_idx)
    scaler = fit_scaler(train)
    train, test = apply_scaler(scaler, train), apply_scaler(scaler, test)
    rep.n_train = train.n_rows
    try:
        t0 = time.perf_counter()
        res = resample(kind, train, rng)
        t1 = time.perf_counter()
        model = gbdt_fit(res.dataset, res.sample_weights, hyperparams, rng)
        t2 = time.perf_counter()
        scores = model.predict_proba(test)
        rep.time_resample, rep.time_fit = t1 - t0, t2 - t1
        rep.n_synthetic = res.n_synthetic
        rep.coherence = _coherence_of(res, train)
        rep.pr_auc = pr_auc(scores, test.labels)
        rep.roc_auc = roc_auc(scores, test.labels)
        rep.pr_at_rec = precision_at_recall(scores, test.labels, recall_threshold)
        if keep_scores:
            rep.scores, rep.test_labels, rep.test_rows = scores, test.labels.copy(), np.asarray(test_idx)
    except ValueError as exc:
        rep.status = "failed"
        rep.error = f"{type(exc).__name__}: {exc}"
        for f in METRIC_FIELDS:
            setattr(rep, f, math.nan)
        logger.warning("cell %s repeat=%d fold=%d failed: %s", kind.label, repeat, fold, exc)
    return rep


def run_benchmark(plan):
    """Repeated stratified K-fold evaluation of every strategy.

    All strategies of a (repeat, fold) pair see the same training rows. The
    returned cells are ordered by repeat, fold, then strategy order of the
    plan, independently of ``n_jobs``.
    """
    ds = plan.dataset
    jobs = []
    for r in range(plan.repeats):
        for f, (tr, te) in enumerate(stratified_folds(ds.labels, plan.folds, plan.seed, r)):
            for kind in plan.strategies:
                jobs.append((kind, tr, te, r, f, cell_seed(plan.seed, r, f, kind.label)))
    args = dict(recall_threshold=plan.recall_threshold, hyperparams=plan.hyperparams,
                keep_scores=plan.keep_scores)
    if plan.n_jobs == 1:
        cells = [run_cell(ds, *job, **args) for job in jobs]
    else:
        cells = Parallel(n_jobs=plan.n_jobs)(delayed(run_cell)(ds, *job, **args) for job in jobs)
    return BenchmarkResult(plan, list(cells))


def pooled_curves(result, strategy, repeat=0):
    """PR and ROC curve points from the pooled out-of-fold scores of one repeat."""
    cells = [c for c in result.cells
             if c.strategy == strategy and c.repeat == repeat and c.status == "ok" and c.scores is not None]
    if not cells:
        return None
    scores = np.concatenate([c.scores for c in cells])
    labels = np.concatenate([c.test_labels for c in cells])
    precision, recall, _ = pr_curve(scores, labels)
    fpr, tpr, _ = roc_curve(scores, labels)
    return {"pr": (recall, precision), "roc": (fpr, tpr)}
