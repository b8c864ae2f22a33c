"""Feature encodings and label definitions.

A scheme is an ordered list of blocks (numeric, one-hot, multi-hot)
whose category sets are fixed at construction, so a feature index means
the same thing for every dataset encoded with it:

* CONTEXT_ONLY: clock fields, activity, foreground app category, and
  motion magnitudes (46 columns),
* DISTRACTION_ONLY: notification category, coarse response behavior,
  and log response time (28 columns),
* FULL: both (74),
* FULL_FINE_RESPONSE: FULL with the six raw behaviors instead of the
  five coarse ones (75),
* FULL_WITH_FACTORS: FULL plus a multi-hot over motivation factors (90).

Labelers map the 1-to-5 attention report onto classifier targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import (
    ACTIVITY_VALUES,
    APP_CATEGORY_VALUES,
    COARSE_BEHAVIOR_VALUES,
    DEFAULT_TAXONOMY,
    FOREGROUND_CATEGORY_VALUES,
    RESPONSE_BEHAVIOR_VALUES,
    TIME_OF_DAY_VALUES,
    CodeTaxonomy,
    Dataset,
    EsmRecord,
)

SCHEME_NAMES = (
    "CONTEXT_ONLY",
    "DISTRACTION_ONLY",
    "FULL",
    "FULL_FINE_RESPONSE",
    "FULL_WITH_FACTORS",
)

LABELER_NAMES = ("ATTENTRACK_I", "ATTENTRACK_II", "ATTENTRACK_III")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureBlock:
    name: str
    kind: str  # "numeric", "one_hot", or "multi_hot"
    values: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return 1 if self.kind == "numeric" else len(self.values)


@dataclass(frozen=True)
class EncodingScheme:
    name: str
    blocks: tuple[FeatureBlock, ...]
    code_to_factor: dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return sum(b.size for b in self.blocks)

    def feature_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for b in self.blocks:
            if b.kind == "numeric":
                names.append(b.name)
            else:
                names.extend(f"{b.name}={v}" for v in b.values)
        return tuple(names)


def _context_blocks() -> tuple[FeatureBlock, ...]:
    return (
        FeatureBlock("time_of_day", "one_hot", TIME_OF_DAY_VALUES),
        FeatureBlock("weekday", "numeric"),
        FeatureBlock("day_of_week", "one_hot", tuple(str(d) for d in range(7))),
        FeatureBlock("activity", "one_hot", ACTIVITY_VALUES),
        FeatureBlock("foreground_category", "one_hot", FOREGROUND_CATEGORY_VALUES),
        FeatureBlock("accel_magnitude", "numeric"),
        FeatureBlock("gyro_magnitude", "numeric"),
    )


def _distraction_blocks(fine_response: bool) -> tuple[FeatureBlock, ...]:
    behavior = (
        FeatureBlock("response_behavior", "one_hot", RESPONSE_BEHAVIOR_VALUES)
        if fine_response
        else FeatureBlock("coarse_behavior", "one_hot", COARSE_BEHAVIOR_VALUES)
    )
    return (
        FeatureBlock("notif_category", "one_hot", APP_CATEGORY_VALUES),
        behavior,
        FeatureBlock("log_response_time", "numeric"),
    )


def scheme(name: str, taxonomy: CodeTaxonomy = DEFAULT_TAXONOMY) -> EncodingScheme:
    if name == "CONTEXT_ONLY":
        blocks = _context_blocks()
    elif name == "DISTRACTION_ONLY":
        blocks = _distraction_blocks(fine_response=False)
    elif name == "FULL":
        blocks = _context_blocks() + _distraction_blocks(fine_response=False)
    elif name == "FULL_FINE_RESPONSE":
        blocks = _context_blocks() + _distraction_blocks(fine_response=True)
    elif name == "FULL_WITH_FACTORS":
        blocks = (
            _context_blocks()
            + _distraction_blocks(fine_response=False)
            + (FeatureBlock("factor", "multi_hot", taxonomy.factor_ids()),)
        )
    else:
        raise FeatureError(f"unknown scheme {name!r}, allowed: {', '.join(SCHEME_NAMES)}")
    return EncodingScheme(name=name, blocks=blocks, code_to_factor=taxonomy.code_to_factor())


@dataclass(frozen=True)
class Labeler:
    name: str
    classes: tuple[str, ...]
    _cut: tuple[int, ...]  # class index per attention level 1..5

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def label(self, attention: int) -> int:
        if not 1 <= attention <= 5:
            raise FeatureError(f"attention must be in [1, 5], got {attention!r}")
        return self._cut[attention - 1]


_LABELERS = {
    "ATTENTRACK_I": Labeler(
        name="ATTENTRACK_I",
        classes=("less_focused", "more_focused"),
        _cut=(0, 0, 1, 1, 1),
    ),
    "ATTENTRACK_II": Labeler(
        name="ATTENTRACK_II",
        classes=("completely_unfocused", "somewhat_focused"),
        _cut=(0, 1, 1, 1, 1),
    ),
    "ATTENTRACK_III": Labeler(
        name="ATTENTRACK_III",
        classes=("low", "medium", "high"),
        _cut=(0, 1, 1, 2, 2),
    ),
}


def labeler(name: str) -> Labeler:
    try:
        return _LABELERS[name]
    except KeyError:
        raise FeatureError(
            f"unknown labeler {name!r}, allowed: {', '.join(LABELER_NAMES)}"
        ) from None


def _magnitude(vec: tuple[float, float, float] | None) -> float:
    if vec is None:
        return 0.0
    return math.sqrt(vec[0] * vec[0] + vec[1] * vec[1] + vec[2] * vec[2])


def encode_record(rec: EsmRecord, enc: EncodingScheme) -> np.ndarray:
    """One dense row; category blocks fail loudly on tokens not in the scheme."""
    out = np.zeros(enc.dim, dtype=np.float64)
    pos = 0
    for b in enc.blocks:
        if b.kind == "numeric":
            if b.name == "weekday":
                out[pos] = 1.0 if rec.weekday else 0.0
            elif b.name == "accel_magnitude":
                out[pos] = _magnitude(rec.accel)
            elif b.name == "gyro_magnitude":
                out[pos] = _magnitude(rec.gyro)
            elif b.name == "log_response_time":
                out[pos] = math.log1p(rec.response_time_s)
            else:
                raise FeatureError(f"unknown numeric block {b.name!r}")
            pos += 1
            continue
        if b.name == "time_of_day":
            token = rec.time_of_day
        elif b.name == "day_of_week":
            token = str(rec.day_of_week)
        elif b.name == "activity":
            token = rec.activity
        elif b.name == "foreground_category":
            token = rec.foreground_category
        elif b.name == "notif_category":
            token = rec.notif_category
        elif b.name == "coarse_behavior":
            token = rec.coarse_behavior
        elif b.name == "response_behavior":
            token = rec.response_behavior
        elif b.name == "factor":
            for code in rec.codes:
                factor_id = enc.code_to_factor.get(code)
                if factor_id is None:
                    raise FeatureError(f"factor: code {code!r} not in the scheme's taxonomy")
                out[pos + b.values.index(factor_id)] = 1.0
            pos += b.size
            continue
        else:
            raise FeatureError(f"unknown categorical block {b.name!r}")
        try:
            idx = b.values.index(token)
        except ValueError:
            raise FeatureError(
                f"{b.name}: token {token!r} not among {', '.join(b.values)}"
            ) from None
        out[pos + idx] = 1.0
        pos += b.size
    return out


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray          # (n, dim) float64
    labels: np.ndarray        # (n,) int64 class indices
    user_ids: tuple[str, ...]
    scheme_name: str
    labeler_name: str
    n_classes: int

    def __post_init__(self):
        if self.rows.shape[0] != self.labels.shape[0] or self.rows.shape[0] != len(self.user_ids):
            raise FeatureError("rows, labels, and user_ids must align")


def build_matrix(ds: Dataset, enc: EncodingScheme, lab: Labeler) -> FeatureMatrix:
    """Encode every record, preserving dataset order."""
    if not ds.records:
        raise FeatureError("dataset has no records")
    rows = np.empty((len(ds.records), enc.dim), dtype=np.float64)
    labels = np.empty(len(ds.records), dtype=np.int64)
    for i, rec in enumerate(ds.records):
        rows[i] = encode_record(rec, enc)
        labels[i] = lab.label(rec.attention)
    return FeatureMatrix(
        rows=rows,
        labels=labels,
        user_ids=tuple(r.user_id for r in ds.records),
        scheme_name=enc.name,
        labeler_name=lab.name,
        n_classes=lab.n_classes,
    )
