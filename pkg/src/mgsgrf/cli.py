"""Command-line entry point: ``mgsgrf {resample,simulate,benchmark,diagnose}``.

Every command reads an optional JSON config file; command-line flags
override its keys. Outputs are written to ``--out`` and depend only on the
config and input files, with the single exception of ``timings.csv``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import simgen
from .data import Schema, default_schema, load_csv, subsample_to_ratio, write_csv
from .evaluation import METRIC_FIELDS, BenchmarkPlan, pooled_curves, run_benchmark
from .grf import GrfClassifier
from .metrics import CombinationSet, KnnClassifier, association, coherence
from .samplers import SamplerError, SamplerKind, resample

logger = logging.getLogger("mgsgrf")

DEFAULTS = {
    "strategies": ["none", "smote-nc", "mgs-grf"],
    "repeats": 20,
    "folds": 5,
    "recall_threshold": 0.2,
    "jobs": 1,
    "classifiers": ["1nn", "5nn", "grf"],
    "n_trees": 100,
}


class ConfigError(ValueError):
    pass


def _num(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    return str(x)


def _clean(obj):
    """JSON-safe copy: NaN becomes null, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])


# ---------------------------------------------------------------------------
# config handling

def build_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
        base = Path(args.config).parent
        for section in ("dataset",):
            if section in cfg:
                for key in ("path", "schema"):
                    if key in cfg[section] and not Path(cfg[section][key]).is_absolute():
                        cfg[section][key] = str(base / cfg[section][key])
        if "params_file" in cfg and not Path(cfg["params_file"]).is_absolute():
            cfg["params_file"] = str(base / cfg["params_file"])
    overrides = {"seed": args.seed, "out": args.out, "recall_threshold": args.recall_threshold,
                 "repeats": args.repeats, "folds": args.folds, "jobs": args.jobs,
                 "params_file": args.params_file}
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if args.strategy:
        cfg["strategies"] = list(args.strategy)
    if args.data:
        cfg["dataset"] = {**cfg.get("dataset", {}), "path": args.data}
    if args.schema:
        cfg["dataset"] = {**cfg.get("dataset", {}), "schema": args.schema}
    if cfg.get("seed") is None:
        raise ConfigError("a seed is required (--seed or 'seed' in the config)")
    if not cfg.get("out"):
        raise ConfigError("an output directory is required (--out or 'out' in the config)")
    cfg["seed"] = int(cfg["seed"])
    return cfg


def _sampler(cfg, name):
    params = {}
    if "n_trees" in cfg:
        params["n_trees"] = int(cfg["n_trees"])
    if cfg.get("k_neighbors"):
        params["k_neighbors"] = int(cfg["k_neighbors"])
    return SamplerKind.parse(name, **params)


def simulation_params(cfg):
    """Parameters from ``params_file`` or the ``simulate`` section, or None."""
    if cfg.get("params_file"):
        with open(cfg["params_file"]) as fh:
            spec = json.load(fh)
        return simgen.params_from_dict(spec.get("params", spec))
    sim = cfg.get("simulate")
    if not sim:
        return None
    sim = dict(sim)
    kind = sim.pop("kind", "coherence")
    index = int(sim.pop("config_index", 1))
    params_seed = int(sim.pop("params_seed", 0))
    params = simgen.default_params(kind, index, params_seed, **sim)
    return dataclasses.replace(params, seed=cfg["seed"])


def load_dataset(cfg, notes):
    """Dataset plus schema from the config (CSV file or simulation)."""
    params = simulation_params(cfg)
    if params is not None:
        ds = simgen.generate(params)
        return ds, default_schema(ds), params
    spec = cfg.get("dataset")
    if not spec or "path" not in spec:
        raise ConfigError("config needs a 'dataset' with a 'path', a 'simulate' section or a params file")
    if "schema" not in spec:
        raise ConfigError("CSV datasets need a 'schema' file")
    schema = Schema.load(spec["schema"])
    ds = load_csv(spec["path"], schema)
    if spec.get("subsample_ratio"):
        rng = np.random.default_rng([cfg["seed"], 7])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ds = subsample_to_ratio(ds, float(spec["subsample_ratio"]), rng)
        notes.extend(str(w.message) for w in caught)
    return ds, schema, None


# ---------------------------------------------------------------------------
# commands

def cmd_resample(cfg):
    out = Path(cfg["out"])
    notes = []
    ds, schema, _ = load_dataset(cfg, notes)
    strategies = cfg["strategies"] if isinstance(cfg["strategies"], list) else [cfg["strategies"]]
    if "strategy" in cfg:
        strategies = [cfg["strategy"]]
    if len(strategies) != 1:
        raise ConfigError("resample takes exactly one strategy")
    kind = _sampler(cfg, strategies[0])
    res = resample(kind, ds, np.random.default_rng(cfg["seed"]))
    extra = {"synthetic": res.synthetic_mask.astype(int).tolist()}
    if res.sample_weights is not None:
        extra["weight"] = [repr(float(w)) for w in res.sample_weights]
    write_csv(out / "augmented.csv", res.dataset, schema, extra=extra)
    schema.save(out / "schema.json")
    first = int(np.flatnonzero(res.synthetic_mask)[0]) if res.n_synthetic else res.dataset.n_rows
    prov = res.provenance
    rows = [(first + i, prov["center"][i], prov["neighbor"][i], prov["draw"][i])
            for i in range(res.n_synthetic)]
    _write_rows(out / "provenance.csv", ["row", "center", "neighbor", "draw"], rows)
    summary = {"strategy": kind.label, "n_input": ds.n_rows, "n_output": res.dataset.n_rows,
               "n_synthetic": res.n_synthetic, "seed": cfg["seed"], "warnings": notes}
    if res.n_synthetic and ds.p:
        summary["coherence"] = coherence(res.synthetic_categorical, CombinationSet.of_class(ds))
    _dump_json(out / "resample.json", summary)
    return summary


def cmd_simulate(cfg):
    out = Path(cfg["out"])
    params = simulation_params(cfg)
    if params is None:
        raise ConfigError("simulate needs a 'simulate' section or a params file")
    ds = simgen.generate(params)
    schema = default_schema(ds)
    write_csv(out / "dataset.csv", ds, schema)
    schema.save(out / "schema.json")
    _dump_json(out / "params.json", {"params": params.to_dict()})
    summary = {"n_rows": ds.n_rows, "d": ds.d, "p": ds.p, "n_minority": ds.n_minority,
               "minority_fraction": ds.n_minority / ds.n_rows}
    _dump_json(out / "simulate.json", summary)
    return summary


def cmd_benchmark(cfg):
    out = Path(cfg["out"])
    notes = []
    ds, _, _ = load_dataset(cfg, notes)
    plan = BenchmarkPlan(ds, [_sampler(cfg, s) for s in cfg["strategies"]],
                         repeats=int(cfg["repeats"]), folds=int(cfg["folds"]), seed=cfg["seed"],
                         recall_threshold=float(cfg["recall_threshold"]), n_jobs=int(cfg["jobs"]),
                         keep_scores=True)
    result = run_benchmark(plan)
    header = ["strategy", "repeat", "fold", "seed", "status"] + list(METRIC_FIELDS) + [
        "n_train", "n_synthetic", "error"]
    _write_rows(out / "results.csv", header,
                [[getattr(c, h) for h in header] for c in result.cells])
    _write_rows(out / "timings.csv", ["strategy", "repeat", "fold", "time_resample", "time_fit", "time"],
                [[c.strategy, c.repeat, c.fold, c.time_resample, c.time_fit, c.time] for c in result.cells])
    agg = result.aggregate()
    for block in agg.values():
        block.pop("time")
    failed = [f"{c.strategy} repeat={c.repeat} fold={c.fold}: {c.error}"
              for c in result.cells if c.status != "ok"]
    curves_dir = out / "curves"
    curves_dir.mkdir(exist_ok=True)
    for kind in plan.strategies:
        curves = pooled_curves(result, kind.label)
        if curves is None:
            continue
        r, p = curves["pr"]
        _write_rows(curves_dir / f"{kind.label}_pr.csv", ["recall", "precision"], zip(r, p))
        f, t = curves["roc"]
        _write_rows(curves_dir / f"{kind.label}_roc.csv", ["fpr", "tpr"], zip(f, t))
    report = {"seed": cfg["seed"], "repeats": plan.repeats, "folds": plan.folds,
              "recall_threshold": plan.recall_threshold,
              "dataset": {"n_rows": ds.n_rows, "d": ds.d, "p": ds.p, "n_minority": ds.n_minority},
              "strategies": [k.label for k in plan.strategies], "n_cells": len(result.cells),
              "aggregate": agg, "warnings": notes + failed}
    _dump_json(out / "report.json", report)
    return report


def _classifier_factory(name, cfg, seed):
    name = name.lower()
    if name.endswith("nn") and name[:-2].isdigit():
        k = int(name[:-2])
        return lambda: KnnClassifier(k)
    if name == "grf":
        return lambda: GrfClassifier(int(cfg.get("n_trees", 100)), rng=seed)
    raise ConfigError(f"unknown classifier {name!r}; use e.g. 1nn, 5nn or grf")


def cmd_diagnose(cfg):
    out = Path(cfg["out"])
    notes = []
    ds, _, params = load_dataset(cfg, notes)
    strategies = cfg["strategies"] if cfg.get("strategies") else ["mgs-grf"]
    report = {"seed": cfg["seed"], "n_minority": ds.n_minority, "coherence": {}, "association": {},
              "warnings": notes}
    reference = CombinationSet.of_class(ds)
    for name in strategies:
        kind = _sampler(cfg, name)
        try:
            res = resample(kind, ds, np.random.default_rng(cfg["seed"]))
        except SamplerError as exc:
            notes.append(f"{kind.label}: {exc}")
            continue
        value = coherence(res.synthetic_categorical, reference) if res.n_synthetic else 1.0
        report["coherence"][kind.label] = {"value": value, "n_synthetic": res.n_synthetic}
    bayes = None
    if isinstance(params, simgen.AssociationSimParams):
        bayes = lambda x: simgen.bayes_categorical(params, x)
    mi = ds.minority_index
    if ds.p and ds.d and mi.size >= 2:
        for name in cfg["classifiers"]:
            factory = _classifier_factory(name, cfg, cfg["seed"])
            value = association(factory, ds.continuous[mi], ds.categorical[mi], bayes)
            report["association"][name] = {
                "value": value,
                "bayes_term": bayes is not None,
                "label": "with Bayes term" if bayes is not None else "without Bayes term"}
    else:
        notes.append("association needs continuous and categorical features and 2 minority rows")
    _dump_json(out / "diagnose.json", report)
    return report


COMMANDS = {"resample": cmd_resample, "simulate": cmd_simulate,
            "benchmark": cmd_benchmark, "diagnose": cmd_diagnose}


def make_parser():
    parser = argparse.ArgumentParser(prog="mgsgrf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (required here or in the config)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--strategy", action="append", help="strategy name, repeatable")
        p.add_argument("--recall-threshold", type=float, dest="recall_threshold")
        p.add_argument("--repeats", type=int)
        p.add_argument("--folds", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--data", help="CSV dataset (overrides config)")
        p.add_argument("--schema", help="JSON schema of the CSV dataset")
        p.add_argument("--params-file", dest="params_file", help="simulation params to replay")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s:%(name)s:%(message)s")
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        Path(cfg["out"]).mkdir(parents=True, exist_ok=True)
        report = COMMANDS[args.command](cfg)
    except (ConfigError, SamplerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    notes = report.get("warnings", []) if isinstance(report, dict) else []
    if notes:
        print(f"{len(notes)} warning(s):", file=sys.stderr)
        for n in notes:
            print(f"  - {n}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
