"""Mixed continuous/categorical datasets, CSV ingestion, splitting and scaling."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

KINDS = ("continuous", "categorical", "label", "ignore")
MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


class SchemaError(ValueError):
    """Raised when a CSV header or a schema file is inconsistent."""


class CsvParseError(ValueError):
    """Raised on unparseable or missing cells, with row and column."""

    def __init__(self, row, column, value, reason):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: {reason} ({value!r})")


class SubsampleWarning(UserWarning):
    pass


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MixedDataset:
    """Column-typed table of ``N`` rows.

    Parameters
    ----------
    continuous : array of shape (N, d)
    categorical : int array of shape (N, p)
        Dense codes, column ``j`` taking values in ``range(cardinalities[j])``.
    labels : int array of shape (N,)
        Binary labels, 1 is the minority class.
    cardinalities : tuple of int, optional
        Inferred as ``max code + 1`` per column when omitted.
    continuous_names, categorical_names : tuple of str, optional
    """

    continuous: np.ndarray
    categorical: np.ndarray
    labels: np.ndarray
    cardinalities: tuple = None
    continuous_names: tuple = None
    categorical_names: tuple = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        n = labels.shape[0]
        cont = np.asarray(self.continuous, dtype=np.float64)
        if cont.ndim == 1 and cont.size == 0:
            cont = cont.reshape(n, 0)
        cat = np.asarray(self.categorical)
        if cat.ndim == 1 and cat.size == 0:
            cat = cat.reshape(n, 0)
        if cont.ndim != 2 or cat.ndim != 2 or labels.ndim != 1:
            raise ValueError("continuous and categorical must be 2-D, labels 1-D")
        if cont.shape[0] != n or cat.shape[0] != n:
            raise ValueError(
                f"row counts differ: continuous {cont.shape[0]}, "
                f"categorical {cat.shape[0]}, labels {n}")
        if cont.shape[1] + cat.shape[1] < 1:
            raise ValueError("dataset needs at least one feature column")
        if not np.all(np.isin(labels, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if cat.size and (not np.issubdtype(cat.dtype, np.integer) and not np.all(cat == np.round(cat))):
            raise ValueError("categorical codes must be integers")
        cat = cat.astype(np.int64)
        if cat.size and cat.min() < 0:
            raise ValueError("categorical codes must be non-negative")
        card = self.cardinalities
        if card is None:
            card = tuple(int(c) + 1 for c in cat.max(axis=0)) if n else (1,) * cat.shape[1]
        card = tuple(int(c) for c in card)
        if len(card) != cat.shape[1]:
            raise ValueError("one cardinality per categorical column expected")
        if n and cat.size and np.any(cat.max(axis=0) >= np.array(card)):
            raise ValueError("categorical code exceeds its column cardinality")
        cnames = self.continuous_names or tuple(f"x{j}" for j in range(cont.shape[1]))
        knames = self.categorical_names or tuple(f"c{j}" for j in range(cat.shape[1]))
        if len(cnames) != cont.shape[1] or len(knames) != cat.shape[1]:
            raise ValueError("column name count mismatch")
        object.__setattr__(self, "continuous", _frozen(cont, np.float64))
        object.__setattr__(self, "categorical", _frozen(cat, np.int64))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "cardinalities", card)
        object.__setattr__(self, "continuous_names", tuple(cnames))
        object.__setattr__(self, "categorical_names", tuple(knames))

    @property
    def n_rows(self):
        return self.labels.shape[0]

    @property
    def d(self):
        return self.continuous.shape[1]

    @property
    def p(self):
        return self.categorical.shape[1]

    @property
    def n_minority(self):
        return int(self.labels.sum())

    @property
    def minority_index(self):
        return np.flatnonzero(self.labels == 1)

    @property
    def is_imbalanced(self):
        return self.n_minority < self.n_rows - self.n_minority

    def take(self, rows):
        """Return the sub-dataset of the given row indices (order kept)."""
        rows = np.asarray(rows, dtype=np.int64)
        return replace(self, continuous=self.continuous[rows],
                       categorical=self.categorical[rows], labels=self.labels[rows])

    def minority(self):
        return self.take(self.minority_index)

    def equals(self, other):
        return (self.cardinalities == other.cardinalities
                and np.array_equal(self.continuous, other.continuous)
                and np.array_equal(self.categorical, other.categorical)
                and np.array_equal(self.labels, other.labels))


def concat(first, second):
    """Stack the rows of two datasets sharing the same columns."""
    if first.d != second.d or first.p != second.p:
        raise ValueError("cannot concatenate datasets with different columns")
    card = tuple(max(a, b) for a, b in zip(first.cardinalities, second.cardinalities))
    return replace(first,
                   continuous=np.vstack([first.continuous, second.continuous]),
                   categorical=np.vstack([first.categorical, second.categorical]),
                   labels=np.concatenate([first.labels, second.labels]),
                   cardinalities=card)


# ---------------------------------------------------------------------------
# schema and CSV

@dataclass
class Schema:
    """Column kinds plus the string <-> code dictionary of categorical columns.

    ``modalities[name][code]`` is the original string; codes are assigned in
    order of first appearance unless the dictionary is preloaded.
    ``positive_label`` names the label value mapped to 1 when labels are not
    already ``0``/``1``.
    """

    columns: dict
    modalities: dict = field(default_factory=dict)
    positive_label: str = None

    def __post_init__(self):
        bad = {k for k in self.columns.values() if k not in KINDS}
        if bad:
            raise SchemaError(f"unknown column kind(s): {sorted(bad)}")
        n_label = sum(k == "label" for k in self.columns.values())
        if n_label != 1:
            raise SchemaError(f"exactly one label column required, found {n_label}")
        for name in self.categorical:
            values = self.modalities.setdefault(name, [])
            if len(set(values)) != len(values):
                raise SchemaError(f"duplicate modality in dictionary of {name!r}")

    @property
    def continuous(self):
        return [c for c, k in self.columns.items() if k == "continuous"]

    @property
    def categorical(self):
        return [c for c, k in self.columns.items() if k == "categorical"]

    @property
    def label(self):
        return next(c for c, k in self.columns.items() if k == "label")

    def encode(self, column, value):
        values = self.modalities[column]
        try:
            return values.index(value)
        except ValueError:
            values.append(value)
            return len(values) - 1

    def decode(self, column, code):
        return self.modalities[column][code]

    def to_dict(self):
        out = {"columns": dict(self.columns), "modalities": {k: list(v) for k, v in self.modalities.items()}}
        if self.positive_label is not None:
            out["positive_label"] = self.positive_label
        return out

    @classmethod
    def from_dict(cls, spec):
        if "columns" not in spec:
            raise SchemaError("schema needs a 'columns' mapping")
        return cls(columns=dict(spec["columns"]),
                   modalities={k: list(v) for k, v in spec.get("modalities", {}).items()},
                   positive_label=spec.get("positive_label"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=False)
            fh.write("\n")


def _is_missing(value):
    return value.strip().lower() in MISSING_TOKENS


def load_csv(path, schema):
    """Read a CSV file into a :class:`MixedDataset`.

    Categorical strings are mapped through ``schema.modalities``; unseen
    values extend the dictionary in place. Missing cells are rejected.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        missing = [c for c in schema.columns if c not in header]
        if missing:
            raise SchemaError(f"column(s) missing from {path.name}: {missing}")
        pos = {c: header.index(c) for c in schema.columns}
        cont_cols, cat_cols, label_col = schema.continuous, schema.categorical, schema.label
        cont, cat, labels = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(lineno, None, row, f"expected {len(header)} fields")
            crow = []
            for c in cont_cols:
                v = row[pos[c]]
                if _is_missing(v):
                    raise CsvParseError(lineno, c, v, "missing value")
                try:
                    crow.append(float(v))
                except ValueError:
                    raise CsvParseError(lineno, c, v, "not a number") from None
            krow = []
            for c in cat_cols:
                v = row[pos[c]].strip()
                if _is_missing(v):
                    raise CsvParseError(lineno, c, v, "missing value")
                krow.append(schema.encode(c, v))
            v = row[pos[label_col]].strip()
            if schema.positive_label is not None:
                y = int(v == schema.positive_label)
            elif v in ("0", "1", "0.0", "1.0"):
                y = int(float(v))
            else:
                raise CsvParseError(lineno, label_col, v, "label must be 0 or 1")
            cont.append(crow)
            cat.append(krow)
            labels.append(y)
    n = len(labels)
    cont = np.array(cont, dtype=np.float64).reshape(n, len(cont_cols))
    cat = np.array(cat, dtype=np.int64).reshape(n, len(cat_cols))
    card = tuple(max(1, len(schema.modalities[c])) for c in cat_cols)
    return MixedDataset(cont, cat, np.array(labels, dtype=np.int64), card,
                        tuple(cont_cols), tuple(cat_cols))


def _fmt(x):
    return repr(float(x))


def write_csv(path, ds, schema=None, label_name="y", extra=None):
    """Write ``ds`` as CSV; categorical codes are decoded through ``schema``.

    ``extra`` is an optional ``{column name: sequence}`` appended after the
    label column. Floats use ``repr`` so a write/read cycle is lossless.
    """
    if schema is not None:
        label_name = schema.label
    header = list(ds.continuous_names) + list(ds.categorical_names) + [label_name]
    extra = extra or {}
    header += list(extra)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n_rows):
            row = [_fmt(v) for v in ds.continuous[i]]
            for j, name in enumerate(ds.categorical_names):
                code = int(ds.categorical[i, j])
                row.append(schema.decode(name, code) if schema is not None else str(code))
            y = int(ds.labels[i])
            if schema is not None and schema.positive_label is not None:
                row.append(schema.positive_label if y else "0")
            else:
                row.append(str(y))
            row += [str(v[i]) for v in extra.values()]
            w.writerow(row)


def default_schema(ds, label_name="y"):
    """Schema whose categorical dictionaries map code ``k`` to the string ``k``."""
    columns = {c: "continuous" for c in ds.continuous_names}
    columns.update({c: "categorical" for c in ds.categorical_names})
    columns[label_name] = "label"
    modalities = {c: [str(k) for k in range(m)]
                  for c, m in zip(ds.categorical_names, ds.cardinalities)}
    return Schema(columns, modalities)


# ---------------------------------------------------------------------------
# subsampling and scaling

def subsample_to_ratio(ds, ratio, rng):
    """Drop minority rows uniformly at random until ``n / N`` is about ``ratio``.

    The kept minority count is ``round(ratio * N_maj / (1 - ratio))`` (at
    least one row), the solution of ``n' / (N_maj + n') = ratio`` rounded to
    the nearest integer. Majority rows are untouched and row order is kept.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    n = ds.n_minority
    n_maj = ds.n_rows - n
    if n == 0 or n_maj == 0:
        raise ValueError("subsampling needs both classes")
    target = max(1, int(math.floor(ratio * n_maj / (1 - ratio) + 0.5)))
    if target >= n:
        warnings.warn(f"minority ratio {n / ds.n_rows:.4f} already at or below {ratio}; "
                      "dataset returned unchanged", SubsampleWarning, stacklevel=2)
        return ds.take(np.arange(ds.n_rows))
    keep_min = rng.choice(ds.minority_index, size=target, replace=False)
    keep = np.sort(np.concatenate([np.flatnonzero(ds.labels == 0), keep_min]))
    return ds.take(keep)


@dataclass(frozen=True)
class Scaler:
    """Per-column z-score parameters; constant columns keep ``std = 1``."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray


def fit_scaler(ds):
    x = ds.continuous
    if ds.n_rows == 0:
        raise ValueError("cannot fit a scaler on an empty dataset")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = ~(std > 0)
    mean = np.where(constant, 0.0, mean)
    std = np.where(constant, 1.0, std)
    return Scaler(mean, std, constant)


def apply_scaler(scaler, ds):
    """Z-score the continuous block; constant columns pass through unchanged."""
    return replace(ds, continuous=(ds.continuous - scaler.mean) / scaler.std)
