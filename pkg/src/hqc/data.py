"""Loading, standardizing and grouping mixed-type tabular data.

A :class:`Dataset` holds the quantitative matrix and the qualitative column
row-aligned. Grouping produces one :class:`ValueGroup` per retained
qualitative value; every downstream computation works on row indices into
the dataset.
"""

import csv
import re
import warnings
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_int, check_labels, check_quantitative
from .exceptions import ConfigError, DataError, SmallSampleWarning

#: Group size below which a small-sample warning is emitted.
SMALL_GROUP_WARN = 30

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Quantitative matrix plus one qualitative column.

    Attributes
    ----------
    quantitative : ndarray of shape (n_rows, n_features)
    qualitative : ndarray of str, shape (n_rows,)
    column_names : tuple of str
    label_name : str
    dropped_rows : int
        Rows discarded during ingestion because of missing or unparseable cells.
    zero_variance_columns : tuple of str
        Columns found constant by :func:`standardize` (set to 0).
    standardized : bool
    context : dict of str -> ndarray of str
        Extra qualitative columns kept row-aligned (e.g. for set-based baselines).
    """

    quantitative: np.ndarray
    qualitative: np.ndarray
    column_names: tuple
    label_name: str = "label"
    dropped_rows: int = 0
    zero_variance_columns: tuple = ()
    standardized: bool = False
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        X = check_quantitative(self.quantitative, name="quantitative")
        y = check_labels(self.qualitative, X.shape[0])
        names = tuple(str(c) for c in self.column_names)
        if len(names) != X.shape[1]:
            raise DataError(
                f"{len(names)} column names given for {X.shape[1]} quantitative columns")
        object.__setattr__(self, "quantitative", _readonly(X))
        object.__setattr__(self, "qualitative", _readonly(y))
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "zero_variance_columns", tuple(self.zero_variance_columns))
        ctx = {}
        for name, col in dict(self.context).items():
            col = np.asarray(col, dtype=object)
            if col.shape != (X.shape[0],):
                raise DataError(f"context column {name!r} is not row-aligned")
            ctx[str(name)] = _readonly(col)
        object.__setattr__(self, "context", ctx)

    @property
    def n_rows(self):
        return self.quantitative.shape[0]

    @property
    def n_features(self):
        return self.quantitative.shape[1]

    @classmethod
    def from_arrays(cls, X, y, column_names=None, label_name="label"):
        X = check_quantitative(X)
        if column_names is None:
            column_names = [f"x{j}" for j in range(X.shape[1])]
        return cls(X, y, tuple(column_names), label_name)


@dataclass(frozen=True, eq=False)
class ValueGroup:
    """Rows sharing one qualitative value."""

    value: str
    row_indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.row_indices, dtype=np.intp)
        if idx.ndim != 1 or (idx.size > 1 and np.any(np.diff(idx) <= 0)):
            raise DataError(f"row indices of group {self.value!r} must be strictly increasing")
        object.__setattr__(self, "row_indices", _readonly(idx))

    @property
    def count(self):
        return int(self.row_indices.size)


@dataclass(frozen=True, eq=False)
class Sample:
    """Quantitative rows drawn for one side of a two-sample comparison."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self):
        return int(self.rows.shape[0])


def _is_number(text):
    return bool(_NUMBER.match(text.strip()))


def load_csv(path, label_column, feature_columns="all", context_columns=()):
    """Read a CSV file into a raw (unstandardized) :class:`Dataset`.

    Parameters
    ----------
    path : str or path-like
    label_column : str
        Column holding the qualitative values to cluster.
    feature_columns : list of str or "all"
        Quantitative context columns. With ``"all"`` every column other than
        the label whose non-empty cells are all numeric literals is used.
    context_columns : sequence of str
        Extra columns carried as raw strings in ``Dataset.context``.

    Rows with an empty label or a missing/unparseable cell in any selected
    feature column are dropped; the count is kept in ``dropped_rows``.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if r]

    header = [h.strip() for h in header]
    if label_column not in header:
        raise ConfigError(f"label column {label_column!r} not found in {path}")
    label_idx = header.index(label_column)
    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: line {lineno} has {len(r)} fields, expected {len(header)}")

    if isinstance(feature_columns, str) and feature_columns == "all":
        selected = []
        for j, name in enumerate(header):
            if j == label_idx:
                continue
            cells = [r[j].strip() for r in rows if r[j].strip()]
            if cells and all(_is_number(c) for c in cells):
                selected.append(name)
    else:
        selected = list(feature_columns)
        missing = [c for c in selected if c not in header]
        if missing:
            raise ConfigError(f"feature column(s) not found: {', '.join(missing)}")
        if label_column in selected:
            raise ConfigError(f"label column {label_column!r} cannot also be a feature")
        for name in selected:
            j = header.index(name)
            if not any(_is_number(r[j]) for r in rows):
                raise DataError(f"feature column {name!r} has no numeric values")
    if not selected:
        raise DataError("zero numeric columns selected")

    absent = [c for c in context_columns if c not in header]
    if absent:
        raise ConfigError(f"context column(s) not found: {', '.join(absent)}")
    ctx_idx = {c: header.index(c) for c in context_columns}
    ctx = {c: [] for c in context_columns}

    cols = [header.index(c) for c in selected]
    values, labels = [], []
    dropped = 0
    for r in rows:
        label = r[label_idx]
        cells = [r[j] for j in cols]
        if not label.strip() or not all(_is_number(c) for c in cells):
            dropped += 1
            continue
        labels.append(label)
        values.append([float(c) for c in cells])
        for c, j in ctx_idx.items():
            ctx[c].append(r[j])
    if not values:
        raise DataError("zero rows survived ingestion")
    X = np.array(values, dtype=np.float64).reshape(len(values), len(cols))
    return Dataset(X, np.array(labels, dtype=object), tuple(selected), label_column,
                   dropped_rows=dropped,
                   context={c: np.array(v, dtype=object) for c, v in ctx.items()})


def standardize(dataset):
    """Z-score every column using the sample standard deviation (ddof=1).

    Constant columns become all zeros and are listed in
    ``zero_variance_columns``.
    """
    X = dataset.quantitative
    if X.shape[0] < 2:
        raise DataError("standardization needs at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    # relative test so that float noise in a constant column is still caught
    scale = np.maximum(np.abs(mean), 1.0)
    zero = std <= 1e-12 * scale
    Z = np.zeros_like(X)
    live = ~zero
    Z[:, live] = (X[:, live] - mean[live]) / std[live]
    flagged = tuple(n for n, z in zip(dataset.column_names, zero) if z)
    return replace(dataset, quantitative=Z, zero_variance_columns=flagged, standardized=True)


def group_by_value(dataset, top_k=None, min_count=2):
    """Group rows by qualitative value.

    Values are ranked by descending count, ties broken by the value string.
    Values with fewer than ``min_count`` rows are discarded, then the first
    ``top_k`` of the remainder are kept.

    Returns
    -------
    list of ValueGroup
    """
    min_count = check_int(min_count, "min_count", minimum=2)
    top_k = check_int(top_k, "top_k", minimum=2, allow_none=True)
    labels = dataset.qualitative
    uniq, inverse, counts = np.unique(labels.astype(str), return_inverse=True,
                                      return_counts=True)
    order = sorted(range(len(uniq)), key=lambda i: (-counts[i], uniq[i]))
    order = [i for i in order if counts[i] >= min_count]
    if top_k is not None:
        order = order[:top_k]
    if len(order) < 2:
        raise DataError(
            f"only {len(order)} value group(s) with at least {min_count} rows; need 2")
    groups = [ValueGroup(str(uniq[i]), np.flatnonzero(inverse == i)) for i in order]
    small = [g.value for g in groups if g.count < SMALL_GROUP_WARN]
    if small:
        warnings.warn(
            f"{len(small)} group(s) have fewer than {SMALL_GROUP_WARN} rows; "
            "squared MMD estimates may be negative", SmallSampleWarning, stacklevel=2)
    return groups


def group_key(values):
    """Stable integer identity for a set of qualitative values."""
    return zlib.crc32("\x1f".join(sorted(values)).encode("utf-8"))


def subsample_indices(row_indices, cap, seed, key):
    """Deterministic uniform subsample of ``row_indices`` (kept sorted).

    Returns ``row_indices`` untouched when ``cap`` is None or not exceeded.
    """
    row_indices = np.asarray(row_indices, dtype=np.intp)
    if cap is None or row_indices.size <= cap:
        return row_indices
    rng = np.random.default_rng([int(seed), int(key)])
    pick = rng.choice(row_indices.size, size=cap, replace=False)
    return row_indices[np.sort(pick)]


def sample_for(groups, dataset, cap=None, seed=0, key=None):
    """Concatenate the quantitative rows of ``groups`` into a :class:`Sample`.

    Rows are taken in ascending row order. If ``cap`` is set and exceeded, a
    uniform subsample of ``cap`` rows is drawn from a generator seeded by
    ``seed`` and ``key`` (by default a hash of the groups' values).
    """
    idx = np.concatenate([g.row_indices for g in groups]) if groups else np.empty(0, np.intp)
    if idx.size == 0:
        raise DataError("cannot sample from empty groups")
    idx = np.sort(idx)
    cap = check_int(cap, "cap", minimum=2, allow_none=True)
    if key is None:
        key = group_key(g.value for g in groups)
    idx = subsample_indices(idx, cap, seed, key)
    return Sample(dataset.quantitative[idx])
