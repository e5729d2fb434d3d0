"""Oversampling of imbalanced mixed continuous/categorical data.

MGS-GRF draws continuous features from local Gaussians fitted on minority
neighbourhoods and copies whole categorical vectors from minority rows chosen
by a generalized random forest, so every synthetic categorical combination
already exists in the minority class.
"""

from .data import (CsvParseError, MixedDataset, Schema, SchemaError, SubsampleWarning,
                   apply_scaler, fit_scaler, load_csv, subsample_to_ratio, write_csv)
from .evaluation import BenchmarkPlan, BenchmarkResult, gbdt_fit, run_benchmark
from .grf import GrfClassifier, grf_fit, grf_sample, grf_weights
from .metrics import (association, coherence, pr_auc, precision_at_recall, roc_auc)
from .samplers import ResampleResult, SamplerError, SamplerKind, resample
from .simgen import default_params, gen_association, gen_coherence, generate

__version__ = "0.1.0"

__all__ = [
    "MixedDataset", "Schema", "SchemaError", "CsvParseError", "SubsampleWarning",
    "load_csv", "write_csv", "subsample_to_ratio", "fit_scaler", "apply_scaler",
    "SamplerKind", "SamplerError", "ResampleResult", "resample",
    "grf_fit", "grf_weights", "grf_sample", "GrfClassifier",
    "coherence", "association", "roc_auc", "pr_auc", "precision_at_recall",
    "gen_coherence", "gen_association", "default_params", "generate",
    "BenchmarkPlan", "BenchmarkResult", "run_benchmark", "gbdt_fit",
]
