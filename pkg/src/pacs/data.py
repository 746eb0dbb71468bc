"""Observed-sample container, CSV ingestion, and treatment/control group views."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TREATMENT = "treatment"
CONTROL = "control"


class DataError(ValueError):
    """Input data violate the observed-sample contract."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """One observed sample (y, d, x) with named covariate columns.

    y : outcome vector, length n
    d : binary treatment indicator, length n (1 = treated)
    x : covariate matrix, shape (n, p); column j is named ``names[j]``

    Instances are immutable (arrays are marked read-only) and safe to
    share across workers.
    """

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        y = _readonly(np.atleast_1d(self.y))
        d = _readonly(np.atleast_1d(self.d))
        x = _readonly(np.atleast_2d(self.x))
        names = tuple(str(s) for s in self.names)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "names", names)
        n = y.shape[0]
        if n < 2:
            raise DataError("fewer than 2 rows")
        if d.shape != (n,) or x.shape[0] != n:
            raise DataError("y, d, x row counts differ")
        if x.ndim != 2 or x.shape[1] < 1:
            raise DataError("need at least one covariate column")
        p = x.shape[1]
        if len(names) != p:
            raise DataError(f"got {len(names)} names for {p} covariates")
        if len(set(names)) != p:
            raise DataError("duplicate covariate names")
        if not np.all(np.isfinite(y)):
            raise DataError("non-finite value in y")
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite value in x")
        if not np.all((d == 0.0) | (d == 1.0)):
            bad = d[(d != 0.0) & (d != 1.0)][0]
            raise DataError(f"d not binary (found {bad!r})")
        if not np.any(d == 1.0):
            raise DataError("treatment group empty")
        if not np.any(d == 0.0):
            raise DataError("control group empty")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class CovariateRoles:
    """Ground-truth partition of covariate indices (0-based) by causal role.

    ``confounders`` drive both treatment and outcome, ``outcome_predictors``
    only the outcome, ``instruments`` only the treatment, and ``spurious``
    neither.  The four sets must partition {0..p-1}.  The selection target
    is ``confounders | outcome_predictors``.
    """

    confounders: frozenset[int]
    outcome_predictors: frozenset[int]
    instruments: frozenset[int]
    spurious: frozenset[int]

    def __post_init__(self):
        sets = (self.confounders, self.outcome_predictors,
                self.instruments, self.spurious)
        for name, s in zip(("confounders", "outcome_predictors",
                            "instruments", "spurious"), sets):
            object.__setattr__(self, name, frozenset(int(j) for j in s))
        sets = (self.confounders, self.outcome_predictors,
                self.instruments, self.spurious)
        total = sum(len(s) for s in sets)
        union = frozenset().union(*sets)
        if len(union) != total:
            raise DataError("role sets are not pairwise disjoint")
        if union != frozenset(range(len(union))):
            raise DataError("role sets must cover exactly {0..p-1}")

    @property
    def p(self) -> int:
        return (len(self.confounders) + len(self.outcome_predictors)
                + len(self.instruments) + len(self.spurious))

    @property
    def target(self) -> frozenset[int]:
        return self.confounders | self.outcome_predictors

    @property
    def non_target(self) -> frozenset[int]:
        return self.instruments | self.spurious

    def label(self, j: int) -> str:
        if j in self.confounders:
            return "confounder"
        if j in self.outcome_predictors:
            return "outcome_predictor"
        if j in self.instruments:
            return "instrument"
        return "spurious"


@dataclass(frozen=True)
class GroupView:
    """Read-only view of the rows of one arm of a Dataset."""

    parent: Dataset
    arm: str
    indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.arm not in (TREATMENT, CONTROL):
            raise DataError(f"unknown arm {self.arm!r}")
        idx = np.ascontiguousarray(self.indices, dtype=np.intp)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        want = 1.0 if self.arm == TREATMENT else 0.0
        expect = np.flatnonzero(self.parent.d == want)
        if not np.array_equal(idx, expect):
            raise DataError(f"indices do not match the {self.arm} arm")

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    @property
    def y(self) -> np.ndarray:
        return self.parent.y[self.indices]

    @property
    def x(self) -> np.ndarray:
        return self.parent.x[self.indices]


def split_groups(ds: Dataset) -> tuple[GroupView, GroupView]:
    """Split a dataset into its treatment and control views.

    The two index sets partition {0..n-1}; Dataset invariants guarantee
    both arms are non-empty.
    """
    t = GroupView(ds, TREATMENT, np.flatnonzero(ds.d == 1.0))
    c = GroupView(ds, CONTROL, np.flatnonzero(ds.d == 0.0))
    return t, c


def _parse_cell(raw: str, col: str, row: int) -> float:
    raw = raw.strip()
    if raw == "":
        raise DataError(f"missing value in column {col!r} (data row {row})")
    try:
        v = float(raw)
    except ValueError:
        raise DataError(
            f"non-numeric value in column {col!r} (data row {row}): {raw!r}"
        ) from None
    if not np.isfinite(v):
        raise DataError(f"non-finite value in column {col!r} (data row {row})")
    return v


def load_csv(path) -> Dataset:
    """Load a dataset from a headed CSV file.

    The header must contain a ``y`` and a ``d`` column; every other column
    is a covariate, kept in file order.  Values must be plain decimal
    numerals (UTF-8, comma separator, no thousands separators); ``d``
    entries must be exactly 0 or 1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for required in ("y", "d"):
            if header.count(required) == 0:
                raise DataError(f"{path}: missing required column {required!r}")
            if header.count(required) > 1:
                raise DataError(f"{path}: duplicate column {required!r}")
        cov_names = [h for h in header if h not in ("y", "d")]
        if not cov_names:
            raise DataError(f"{path}: no covariate columns")
        rows = []
        for r, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: data row {r} has {len(rec)} fields, expected {len(header)}"
                )
            rows.append([_parse_cell(v, header[k], r) for k, v in enumerate(rec)])
    if len(rows) < 2:
        raise DataError(f"{path}: fewer than 2 data rows")
    table = np.asarray(rows, dtype=np.float64)
    y = table[:, header.index("y")]
    d = table[:, header.index("d")]
    cov_cols = [k for k, h in enumerate(header) if h not in ("y", "d")]
    x = table[:, cov_cols]
    try:
        return Dataset(y=y, d=d, x=x, names=tuple(cov_names))
    except DataError as e:
        raise DataError(f"{path}: {e}") from None


def write_csv(ds: Dataset, path) -> None:
    """Write a dataset back to CSV with full round-trip precision."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "d"] + list(ds.names))
        for i in range(ds.n):
            row = [repr(float(ds.y[i])), str(int(ds.d[i]))]
            row += [repr(float(v)) for v in ds.x[i]]
            writer.writerow(row)
