"""Contingency tables and the chi-square test of independence.

The statistic is summed with ``math.fsum`` over the (O - E)^2 / E
terms, which is correctly rounded and therefore independent of term
order: a table and its transpose give the exact same value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as _chi2_dist

from ..dataset import (
    ACTIVITY_VALUES,
    APP_CATEGORY_VALUES,
    COARSE_BEHAVIOR_VALUES,
    FOREGROUND_CATEGORY_VALUES,
    RESPONSE_BEHAVIOR_VALUES,
    TIME_OF_DAY_VALUES,
    Dataset,
)


class StatsError(ValueError):
    pass


# field name -> (declared level order or None for observed-sorted, accessor)
_FIELDS = {
    "attention": (("1", "2", "3", "4", "5"), lambda r: str(r.attention)),
    "activity": (ACTIVITY_VALUES, lambda r: r.activity),
    "time_of_day": (TIME_OF_DAY_VALUES, lambda r: r.time_of_day),
    "weekday": (("weekday", "weekend"), lambda r: "weekday" if r.weekday else "weekend"),
    "day_of_week": (tuple(str(d) for d in range(7)), lambda r: str(r.day_of_week)),
    "response_behavior": (RESPONSE_BEHAVIOR_VALUES, lambda r: r.response_behavior),
    "coarse_behavior": (COARSE_BEHAVIOR_VALUES, lambda r: r.coarse_behavior),
    "notif_category": (APP_CATEGORY_VALUES, lambda r: r.notif_category),
    "foreground_category": (FOREGROUND_CATEGORY_VALUES, lambda r: r.foreground_category),
    "round": (("1", "2"), lambda r: str(r.round)),
    "user_id": (None, lambda r: r.user_id),
}

CROSSTAB_FIELDS = tuple(_FIELDS)


@dataclass(frozen=True)
class ContingencyTable:
    row_field: str
    col_field: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: np.ndarray  # (R, C) int64

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class Chi2Result:
    chi2: float
    df: int
    p: float
    n: int

    def format(self) -> str:
        p = "p < .001" if self.p < 0.001 else f"p = {self.p:.3f}"
        return f"chi2({self.df}, N={self.n}) = {self.chi2:.2f}, {p}"


def crosstab(ds: Dataset, row_field: str, col_field: str) -> ContingencyTable:
    """Cross-tabulate two record fields; unobserved levels are dropped."""
    for f in (row_field, col_field):
        if f not in _FIELDS:
            raise StatsError(f"unknown field {f!r}, allowed: {', '.join(_FIELDS)}")
    if row_field == col_field:
        raise StatsError("row and column fields must differ")
    row_order, row_get = _FIELDS[row_field]
    col_order, col_get = _FIELDS[col_field]
    tally: dict[tuple[str, str], int] = {}
    seen_rows: set[str] = set()
    seen_cols: set[str] = set()
    for rec in ds.records:
        key = (row_get(rec), col_get(rec))
        tally[key] = tally.get(key, 0) + 1
        seen_rows.add(key[0])
        seen_cols.add(key[1])
    rows = tuple(v for v in row_order if v in seen_rows) if row_order else tuple(sorted(seen_rows))
    cols = tuple(v for v in col_order if v in seen_cols) if col_order else tuple(sorted(seen_cols))
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for (rv, cv), c in tally.items():
        counts[rows.index(rv), cols.index(cv)] = c
    return ContingencyTable(row_field, col_field, rows, cols, counts)


def chi_square(table: ContingencyTable) -> Chi2Result:
    """Pearson chi-square test of independence, no continuity correction."""
    O = np.asarray(table.counts, dtype=np.float64)
    if O.shape[0] < 2 or O.shape[1] < 2:
        raise StatsError("table must be at least 2x2")
    if (O < 0).any():
        raise StatsError("counts must be non-negative")
    row_tot = O.sum(axis=1)
    col_tot = O.sum(axis=0)
    for i, t in enumerate(row_tot):
        if t == 0:
            raise StatsError(f"row {table.row_labels[i]!r} has a zero margin")
    for j, t in enumerate(col_tot):
        if t == 0:
            raise StatsError(f"column {table.col_labels[j]!r} has a zero margin")
    n = float(O.sum())
    E = np.outer(row_tot, col_tot) / n
    terms = (O - E) ** 2 / E
    stat = math.fsum(terms.ravel().tolist())
    df = (O.shape[0] - 1) * (O.shape[1] - 1)
    p = float(_chi2_dist.sf(stat, df))
    return Chi2Result(chi2=stat, df=df, p=p, n=int(n))


def table_from_counts(counts, row_labels=None, col_labels=None) -> ContingencyTable:
    """Wrap a raw count matrix (lists or array) for chi_square."""
    arr = np.asarray(counts, dtype=np.int64)
    if arr.ndim != 2:
        raise StatsError("counts must be 2-d")
    rows = tuple(row_labels) if row_labels else tuple(str(i) for i in range(arr.shape[0]))
    cols = tuple(col_labels) if col_labels else tuple(str(j) for j in range(arr.shape[1]))
    if len(rows) != arr.shape[0] or len(cols) != arr.shape[1]:
        raise StatsError("label lengths must match the count matrix")
    return ContingencyTable("rows", "cols", rows, cols, arr)
