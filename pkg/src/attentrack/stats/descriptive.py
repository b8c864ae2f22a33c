"""Descriptive tables and agreement.

Quartiles use Tukey hinges: the quartiles are medians of the lower and
upper halves, where an odd-length sample includes the median in both
halves. Standard deviations are population (divide by N) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset
from .contingency import _FIELDS, StatsError


@dataclass(frozen=True)
class GroupDescription:
    label: str
    total: int
    proportion: float
    level_counts: tuple[int, int, int, int, int]
    level_pcts: tuple[float, float, float, float, float]
    mean: float
    sd: float
    median: float


def describe_by_group(ds: Dataset, field: str) -> tuple[GroupDescription, ...]:
    """Attention distribution per level of ``field``, largest groups first."""
    if field not in _FIELDS:
        raise StatsError(f"unknown field {field!r}, allowed: {', '.join(_FIELDS)}")
    if field == "attention":
        raise StatsError("grouping attention by itself is meaningless")
    if not ds.records:
        raise StatsError("dataset has no records")
    _, accessor = _FIELDS[field]
    groups: dict[str, list[int]] = {}
    for rec in ds.records:
        groups.setdefault(accessor(rec), []).append(rec.attention)
    n = len(ds.records)
    out = []
    for label in sorted(groups, key=lambda g: (-len(groups[g]), g)):
        vals = np.asarray(groups[label], dtype=np.float64)
        counts = tuple(int((vals == lvl).sum()) for lvl in range(1, 6))
        out.append(
            GroupDescription(
                label=label,
                total=vals.size,
                proportion=vals.size / n,
                level_counts=counts,
                level_pcts=tuple(100.0 * c / vals.size for c in counts),
                mean=float(vals.mean()),
                sd=float(vals.std()),
                median=float(np.median(vals)),
            )
        )
    return tuple(out)


def tukey_hinges(values) -> tuple[float, float, float]:
    """(Q1, median, Q3) by the median-of-halves rule."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise StatsError("need at least one value")
    half = (v.size + 1) // 2
    q1 = float(np.median(v[:half]))
    q3 = float(np.median(v[v.size - half:]))
    return q1, float(np.median(v)), q3


@dataclass(frozen=True)
class ResponseTimeRow:
    attention: int
    n: int
    mean: float
    q1: float
    median: float
    q3: float


def response_time_table(ds: Dataset) -> tuple[ResponseTimeRow, ...]:
    """Response-time summary per attention level (levels present only)."""
    if not ds.records:
        raise StatsError("dataset has no records")
    by_level: dict[int, list[int]] = {}
    for rec in ds.records:
        by_level.setdefault(rec.attention, []).append(rec.response_time_s)
    rows = []
    for level in sorted(by_level):
        vals = np.asarray(by_level[level], dtype=np.float64)
        q1, med, q3 = tukey_hinges(vals)
        rows.append(
            ResponseTimeRow(
                attention=level,
                n=vals.size,
                mean=float(vals.mean()),
                q1=q1,
                median=med,
                q3=q3,
            )
        )
    return tuple(rows)


def cohens_kappa(a, b) -> float:
    """Agreement between two raters beyond chance.

    Accepts any label values; only equality matters. Perfect expected
    agreement (both raters constant and equal) returns 1.0.
    """
    a = list(a)
    b = list(b)
    if len(a) != len(b) or not a:
        raise StatsError("raters must give equal-length, non-empty label lists")
    n = len(a)
    labels = sorted({*a, *b}, key=str)
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for x, y in zip(a, b):
        cm[index[x], index[y]] += 1
    po = float(np.trace(cm)) / n
    pa = cm.sum(axis=1) / n
    pb = cm.sum(axis=0) / n
    pe = float(np.dot(pa, pb))
    if math.isclose(pe, 1.0, abs_tol=1e-15):
        return 1.0
    return (po - pe) / (1.0 - pe)
