"""Finite population loading and summaries for the Wisconsin breast cancer data.

The canonical input is the UCI ``breast-cancer-wisconsin.data`` file: eleven
comma-separated integer fields, no header, ``?`` for missing values and the
class coded 2 (benign) / 4 (malignant).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from ._util import round_half_away

SUBJECT_ID = "Subject ID"
INDEPENDENT_COVARIATE = "Independent Covariate"
RESPONSE = "Malignant Tumours"

# UCI column order, fields 2-10
CYTOLOGICAL = (
    "Clump Thickness",
    "Uniformity of Cell Size",
    "Uniformity of Cell Shape",
    "Marginal Adhesion",
    "Single Epithelial Cell Size",
    "Bare Nuclei",
    "Bland Chromatin",
    "Normal Nucleoli",
    "Mitoses",
)

CLASS_CODES = {2: 0, 4: 1}


class DataError(ValueError):
    """Raised for malformed population input; ``row`` is 1-based when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MissingPolicy:
    mode: str = "impute_median"
    value: float | None = None

    MODES = ("drop_rows", "impute_constant", "impute_median")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValueError(f"unknown missing-value mode {self.mode!r}")
        if self.mode == "impute_constant":
            if self.value is None or not 1 <= self.value <= 10:
                raise ValueError("impute_constant value must lie in [1, 10]")

    @classmethod
    def parse(cls, text: str) -> "MissingPolicy":
        """Parse the command-line form: ``drop``, ``median`` or ``const=V``."""
        text = text.strip()
        if text == "drop":
            return cls("drop_rows")
        if text == "median":
            return cls("impute_median")
        if text.startswith("const="):
            try:
                v = float(text[len("const="):])
            except ValueError:
                raise ValueError(f"bad constant in missing policy {text!r}") from None
            return cls("impute_constant", v)
        raise ValueError(f"unknown missing policy {text!r} (expected drop, median or const=V)")


@dataclass(frozen=True)
class Record:
    id: int
    response: int
    concomitants: Mapping[str, float]


@dataclass(frozen=True)
class Population:
    """Immutable finite population: binary response plus numeric concomitant columns.

    Column arrays are stored read-only so a population can be shared between
    replicate workers.
    """

    ids: np.ndarray
    response: np.ndarray
    columns: Mapping[str, np.ndarray]
    response_name: str = RESPONSE
    ordinal_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        ids = np.array(self.ids, dtype=np.int64)
        y = np.array(self.response, dtype=np.int8)
        if y.ndim != 1 or ids.shape != y.shape:
            raise DataError("ids and response must be 1-D arrays of equal length")
        if y.size < 2:
            raise DataError("population needs at least 2 records")
        if not np.isin(y, (0, 1)).all():
            raise DataError("response values must be 0 or 1")
        cols = {}
        for name, col in self.columns.items():
            a = np.array(col, dtype=float)
            if a.shape != y.shape:
                raise DataError(f"column {name!r} has {a.size} values, expected {y.size}")
            if not np.isfinite(a).all():
                raise DataError(f"column {name!r} has missing or non-finite values")
            if name in self.ordinal_names and ((a < 1) | (a > 10)).any():
                raise DataError(f"column {name!r} has values outside [1, 10]")
            a.flags.writeable = False
            cols[name] = a
        ids.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "columns", MappingProxyType(cols))

    @property
    def size(self) -> int:
        return int(self.response.size)

    @property
    def concomitant_names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"unknown concomitant {name!r}") from None

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        """Concomitant values as an (N', K) array in the order given."""
        return np.column_stack([self.column(n) for n in names])

    @property
    def records(self) -> list[Record]:
        names = self.concomitant_names
        return [
            Record(int(self.ids[i]), int(self.response[i]),
                   {n: float(self.columns[n][i]) for n in names})
            for i in range(self.size)
        ]


@dataclass(frozen=True)
class CsvColumns:
    """Column names for the header-bearing CSV variant.

    ``concomitants`` defaults to every column other than the id and response.
    Response values may be coded 0/1 or 2/4.
    """

    response: str
    concomitants: tuple[str, ...] | None = None
    id: str | None = None
    ordinal: tuple[str, ...] = ()


def _parse_int(text: str, row: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataError(f"non-integer field {text!r}", row) from None


def _read_uci(path: Path):
    ids, ys, rows = [], [], []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 11:
                raise DataError(f"expected 11 fields, found {len(fields)}", lineno)
            ids.append(_parse_int(fields[0], lineno))
            cls = _parse_int(fields[10], lineno)
            if cls not in CLASS_CODES:
                raise DataError(f"class value {cls} not in {{2, 4}}", lineno)
            ys.append(CLASS_CODES[cls])
            vals = []
            for f in fields[1:10]:
                if f == "?":
                    vals.append(np.nan)
                else:
                    v = _parse_int(f, lineno)
                    if not 1 <= v <= 10:
                        raise DataError(f"cytological value {v} outside [1, 10]", lineno)
                    vals.append(float(v))
            rows.append(vals)
    if not ys:
        raise DataError("empty population")
    return np.array(ids), np.array(ys), np.array(rows, dtype=float), list(CYTOLOGICAL)


def _read_csv(path: Path, spec: CsvColumns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if not header:
            raise DataError("empty population")
        for col in (spec.response, spec.id):
            if col is not None and col not in header:
                raise DataError(f"column {col!r} not found in header")
        names = list(spec.concomitants) if spec.concomitants is not None else [
            h for h in header if h not in (spec.response, spec.id)]
        for n in names:
            if n not in header:
                raise DataError(f"column {n!r} not found in header")
        ids, ys, rows = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if None in rec or any(rec[h] is None for h in header):
                raise DataError("wrong field count", lineno)
            raw_y = _parse_int(rec[spec.response].strip(), lineno)
            if raw_y in CLASS_CODES:
                ys.append(CLASS_CODES[raw_y])
            elif raw_y in (0, 1):
                ys.append(raw_y)
            else:
                raise DataError(f"response value {raw_y} not in {{0, 1}} or {{2, 4}}", lineno)
            ids.append(_parse_int(rec[spec.id], lineno) if spec.id else lineno - 1)
            vals = []
            for n in names:
                f = rec[n].strip()
                if f == "?":
                    vals.append(np.nan)
                    continue
                try:
                    vals.append(float(f))
                except ValueError:
                    raise DataError(f"non-numeric field {f!r} in column {n!r}", lineno) from None
            rows.append(vals)
    if not ys:
        raise DataError("empty population")
    return np.array(ids), np.array(ys), np.array(rows, dtype=float), names


def _apply_policy(ids, ys, X, policy: MissingPolicy):
    miss = np.isnan(X)
    if not miss.any():
        return ids, ys, X
    if policy.mode == "drop_rows":
        keep = ~miss.any(axis=1)
        if keep.sum() == 0:
            raise DataError("empty population")
        return ids[keep], ys[keep], X[keep]
    X = X.copy()
    for k in np.flatnonzero(miss.any(axis=0)):
        if policy.mode == "impute_constant":
            fill = policy.value
        else:
            observed = X[~miss[:, k], k]
            if observed.size == 0:
                raise DataError(f"column {k + 1} has no observed values to take a median of")
            fill = float(round_half_away(np.median(observed)))
        X[miss[:, k], k] = fill
    return ids, ys, X


def load_population(path, policy: MissingPolicy | None = None, seed: int | None = None,
                    columns: CsvColumns | None = None) -> Population:
    """Read a population file and apply the missing-value policy.

    Without ``columns`` the file is parsed as the headerless UCI format and the
    Subject ID is kept as an extra (non-ordinal) concomitant. When ``seed`` is
    given an Independent Covariate column is appended from that seed.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"population file not found: {path}")
    policy = policy or MissingPolicy()
    if columns is None:
        ids, ys, X, names = _read_uci(path)
        ordinal = tuple(CYTOLOGICAL)
    else:
        ids, ys, X, names = _read_csv(path, columns)
        ordinal = tuple(columns.ordinal)
    ids, ys, X = _apply_policy(ids, ys, X, policy)
    cols = {n: X[:, k] for k, n in enumerate(names)}
    if columns is None:
        cols[SUBJECT_ID] = ids.astype(float)
    elif columns.id is not None:
        cols[columns.id] = ids.astype(float)
    pop = Population(ids, ys, cols, ordinal_names=ordinal)
    if seed is not None:
        pop = add_independent_covariate(pop, INDEPENDENT_COVARIATE, seed)
    return pop


def count_missing_rows(path) -> int:
    """Number of lines in a UCI-format file with at least one ``?`` field."""
    with open(path) as fh:
        return sum(1 for line in fh if line.strip() and "?" in line.split(","))


def population_proportion(pop: Population) -> float:
    return float(np.count_nonzero(pop.response)) / pop.size


def correlation(pop: Population, concomitant: str) -> float:
    """Pearson (point-biserial) correlation between the response and a concomitant."""
    x = pop.response.astype(float) if concomitant == pop.response_name else pop.column(concomitant)
    y = pop.response.astype(float)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError(f"zero variance in {concomitant!r} or the response")
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    return max(-1.0, min(1.0, r))


def add_independent_covariate(pop: Population, name: str, seed: int) -> Population:
    """Append a column drawn uniformly from {1, ..., 10}, independent of everything else."""
    if name in pop.columns:
        raise ValueError(f"concomitant {name!r} already exists")
    rng = np.random.default_rng(seed)
    col = rng.integers(1, 11, size=pop.size).astype(float)
    cols = dict(pop.columns)
    cols[name] = col
    return Population(pop.ids, pop.response, cols, pop.response_name,
                      ordinal_names=pop.ordinal_names + (name,))


def summary(pop: Population) -> dict:
    """N', malignant count, p and correlations sorted by descending |rho|."""
    rhos = {}
    for name in pop.concomitant_names:
        try:
            rhos[name] = correlation(pop, name)
        except ValueError:
            rhos[name] = float("nan")
    ordered = sorted(rhos.items(), key=lambda kv: -abs(kv[1]) if np.isfinite(kv[1]) else 0.0)
    return {
        "size": pop.size,
        "malignant": int(np.count_nonzero(pop.response)),
        "p": population_proportion(pop),
        "correlations": ordered,
    }
