"""Right-censored survival datasets: loading, validation, folds, bootstrap."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_NA_TOKENS = frozenset({"", "NA", "NaN"})

EXAMPLE_DATASETS = {
    "veteran": ("celltype",),
    "lung": (),
    "pbc": ("sex",),
}


class DataError(ValueError):
    """Raised when input data violate the survival-data contract."""


@dataclass(frozen=True)
class FeatureMeta:
    name: str
    kind: str = "numeric"
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "categorical" and len(set(self.levels)) != len(self.levels):
            raise ValueError(f"duplicate levels for feature {self.name!r}")

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"


class SurvivalRecord(NamedTuple):
    covariates: tuple
    time: float
    status: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable right-censored dataset.

    Covariates are held as a float matrix ``X`` with ``NaN`` marking missing
    cells. Categorical columns store the integer index of the level in
    ``features[r].levels``.
    """

    X: np.ndarray
    time: np.ndarray
    status: np.ndarray
    features: tuple[FeatureMeta, ...]
    event_times: np.ndarray = field(init=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        time = np.array(self.time, dtype=float, copy=True)
        status = np.array(self.status, copy=True)
        features = tuple(self.features)
        if X.ndim != 2:
            raise DataError("covariate matrix must be 2-D")
        n, r = X.shape
        if n < 1:
            raise DataError("dataset must contain at least one record")
        if time.shape != (n,) or status.shape != (n,):
            raise DataError("time/status length does not match covariate rows")
        if len(features) != r:
            raise DataError(f"expected {r} feature descriptors, got {len(features)}")
        names = [f.name for f in features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if not np.all(np.isfinite(time)) or np.any(time <= 0):
            raise DataError("non-positive time")
        if not np.all(np.isin(status, (0, 1))):
            raise DataError("status outside {0,1}")
        status = status.astype(np.int64)
        for j, f in enumerate(features):
            if f.is_categorical:
                col = X[:, j]
                obs = col[~np.isnan(col)]
                if np.any((obs < 0) | (obs >= len(f.levels)) | (obs != np.round(obs))):
                    raise DataError(f"invalid level code in feature {f.name!r}")
        for arr in (X, time, status):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "status", status)
        object.__setattr__(self, "features", features)
        ev = np.unique(time[status == 1])
        ev.setflags(write=False)
        object.__setattr__(self, "event_times", ev)

    @property
    def n_records(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.array([f.is_categorical for f in self.features], dtype=bool)

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.X).sum())

    @property
    def records(self) -> list[SurvivalRecord]:
        out = []
        for i in range(self.n_records):
            cov = tuple(self._decode(j, self.X[i, j]) for j in range(self.n_features))
            out.append(SurvivalRecord(cov, float(self.time[i]), int(self.status[i])))
        return out

    def _decode(self, j, value):
        if np.isnan(value):
            return None
        f = self.features[j]
        return f.levels[int(value)] if f.is_categorical else float(value)

    def class_counts(self) -> tuple[int, int]:
        """Return ``(censored, events)``."""
        events = int(self.status.sum())
        return self.n_records - events, events

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], self.time[idx], self.status[idx], self.features)

    def with_X(self, X) -> "Dataset":
        return Dataset(X, self.time, self.status, self.features)

    def with_features(self, columns: Sequence[int]) -> "Dataset":
        cols = list(columns)
        return Dataset(self.X[:, cols], self.time, self.status,
                       tuple(self.features[c] for c in cols))

    def summary(self) -> dict:
        censored, events = self.class_counts()
        return {
            "n_records": self.n_records,
            "n_features": self.n_features,
            "censored": censored,
            "events": events,
            "n_event_times": int(self.event_times.size),
            "n_missing": self.n_missing,
        }


def concat(a: Dataset, b: Dataset) -> Dataset:
    if a.features != b.features:
        raise DataError("cannot concatenate datasets with different features")
    return Dataset(np.vstack([a.X, b.X]), np.concatenate([a.time, b.time]),
                   np.concatenate([a.status, b.status]), a.features)


def _parse_float(token: str, line: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataError(f"line {line}: unparseable numeric cell {token!r} in column {column!r}") from None


def read_csv_text(text: str, time_col: str = "time", status_col: str = "status",
                  categorical: Iterable[str] = (), na_tokens=DEFAULT_NA_TOKENS,
                  features: Sequence[FeatureMeta] | None = None) -> Dataset:
    """Parse CSV text into a :class:`Dataset`.

    When ``features`` is given, the column schema and the categorical level
    lists are taken from it (levels not seen there are an error); otherwise
    levels are collected in order of first appearance.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty file: header row missing") from None
    for col in (time_col, status_col):
        if col not in header:
            raise DataError(f"column {col!r} not found in header")
    na_tokens = frozenset(na_tokens)
    feat_cols = [h for h in header if h not in (time_col, status_col)]
    if features is not None:
        if [f.name for f in features] != feat_cols:
            raise DataError("CSV feature columns do not match the model schema")
        cat = {f.name for f in features if f.is_categorical}
        levels = {f.name: list(f.levels) for f in features if f.is_categorical}
        frozen_levels = True
    else:
        cat = set(categorical)
        unknown = cat - set(feat_cols)
        if unknown:
            raise DataError(f"categorical columns not in file: {sorted(unknown)}")
        levels = {c: [] for c in feat_cols if c in cat}
        frozen_levels = False
    pos = {h: k for k, h in enumerate(header)}

    rows, times, statuses = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: malformed row length {len(row)} (expected {len(header)})")
        cells = [c.strip() for c in row]
        t_tok, s_tok = cells[pos[time_col]], cells[pos[status_col]]
        if t_tok in na_tokens or s_tok in na_tokens:
            raise DataError(f"line {lineno}: missing time/status")
        t = _parse_float(t_tok, lineno, time_col)
        if not t > 0:
            raise DataError(f"line {lineno}: non-positive time {t_tok}")
        s = _parse_float(s_tok, lineno, status_col)
        if s not in (0.0, 1.0):
            raise DataError(f"line {lineno}: status outside {{0,1}}: {s_tok}")
        vals = []
        for name in feat_cols:
            tok = cells[pos[name]]
            if tok in na_tokens:
                vals.append(np.nan)
            elif name in cat:
                lv = levels[name]
                if tok not in lv:
                    if frozen_levels:
                        raise DataError(f"line {lineno}: unknown level {tok!r} for {name!r}")
                    lv.append(tok)
                vals.append(float(lv.index(tok)))
            else:
                vals.append(_parse_float(tok, lineno, name))
        rows.append(vals)
        times.append(t)
        statuses.append(int(s))
    if not rows:
        raise DataError("no data rows")
    if features is None:
        features = tuple(
            FeatureMeta(c, "categorical", tuple(levels[c])) if c in cat else FeatureMeta(c)
            for c in feat_cols)
    return Dataset(np.array(rows, dtype=float).reshape(len(rows), len(feat_cols)),
                   np.array(times), np.array(statuses), tuple(features))


def load_csv(path, time_col: str = "time", status_col: str = "status",
             categorical: Iterable[str] = (), na_tokens=DEFAULT_NA_TOKENS,
             features: Sequence[FeatureMeta] | None = None) -> Dataset:
    """Load a right-censored dataset from a CSV file with a header row."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    return read_csv_text(path.read_text(), time_col, status_col, categorical, na_tokens, features)


def _format_value(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_csv_text(data: Dataset, time_col: str = "time", status_col: str = "status",
                na_token: str = "NA") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(data.feature_names + [time_col, status_col])
    for i in range(data.n_records):
        row = []
        for j, f in enumerate(data.features):
            v = data.X[i, j]
            if np.isnan(v):
                row.append(na_token)
            elif f.is_categorical:
                row.append(f.levels[int(v)])
            else:
                row.append(_format_value(v))
        row += [_format_value(data.time[i]), str(int(data.status[i]))]
        w.writerow(row)
    return buf.getvalue()


def write_csv(data: Dataset, path, time_col: str = "time", status_col: str = "status") -> None:
    Path(path).write_text(to_csv_text(data, time_col, status_col))


def load_example(name: str) -> Dataset:
    """Load one of the bundled public datasets (``veteran``, ``lung``, ``pbc``)."""
    if name not in EXAMPLE_DATASETS:
        raise KeyError(f"unknown example dataset {name!r}; choose from {sorted(EXAMPLE_DATASETS)}")
    text = resources.files("brsf.data").joinpath(f"{name}.csv").read_text()
    return read_csv_text(text, categorical=EXAMPLE_DATASETS[name])


def example_path(name: str) -> Path:
    return Path(str(resources.files("brsf.data").joinpath(f"{name}.csv")))


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)


def split_folds(data: Dataset | int, k: int, seed: int) -> FoldAssignment:
    """Randomly partition record indices into ``k`` folds of near-equal size.

    Folds are not stratified by censoring status.
    """
    n = data if isinstance(data, (int, np.integer)) else data.n_records
    if not 2 <= k <= n:
        raise ValueError(f"fold count k={k} out of range [2, {n}]")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % k
    return FoldAssignment(fold_of, k)


def bootstrap_sample(data: Dataset | int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``N`` indices uniformly with replacement.

    Returns the sorted in-bag multiset and the out-of-bag index set.
    """
    n = data if isinstance(data, (int, np.integer)) else data.n_records
    rng = np.random.default_rng(seed)
    in_bag = np.sort(rng.integers(0, n, size=n))
    counts = np.bincount(in_bag, minlength=n)
    return in_bag, np.flatnonzero(counts == 0)
