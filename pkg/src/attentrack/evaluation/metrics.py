"""Classification metrics for fold-level evaluation.

AUC is the Mann-Whitney rank statistic with midranks for ties, so a
constant score gives 0.5 and it agrees with the trapezoidal ROC area.
Multiclass AUC averages one-vs-rest binary AUCs over the classes that
have both positives and negatives in the fold. Folds whose test split
contains a single true class get no AUC at all rather than a fake 0.5.

Precision, recall, and F1 come in three flavors: the positive class
(index 1, binary tasks only), macro over the task's full label set, and
support-weighted. Weighted recall equals accuracy by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    precision_pos: float | None = None
    recall_pos: float | None = None
    f1_pos: float | None = None
    auc: float | None = None
    n: int = 0


METRIC_FIELDS = tuple(f.name for f in fields(MetricSet) if f.name != "n")


def binary_auc(y_bin: np.ndarray, score: np.ndarray) -> float | None:
    """Rank AUC of ``score`` for the indicator ``y_bin``; None if one-sided."""
    y_bin = np.asarray(y_bin, dtype=bool)
    n_pos = int(y_bin.sum())
    n_neg = y_bin.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(np.asarray(score, dtype=np.float64))
    rank_sum = float(ranks[y_bin].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _multiclass_auc(y: np.ndarray, scores: np.ndarray, n_classes: int) -> float | None:
    parts = []
    for c in range(n_classes):
        part = binary_auc(y == c, scores[:, c])
        if part is not None:
            parts.append(part)
    if not parts:
        return None
    return float(np.mean(parts))


def compute_metrics(y_true, y_pred, y_score=None, n_classes: int | None = None) -> MetricSet:
    """Score one fold.

    ``y_score`` is the (n, k) probability matrix over class ids
    0..n_classes-1 (a 1-d positive-class score is accepted for binary
    tasks); omit it to skip AUC.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise MetricError("y_true and y_pred must be equal-length and non-empty")
    if n_classes is None:
        n_classes = int(max(y_true.max(), y_pred.max())) + 1
    if y_true.min() < 0 or int(max(y_true.max(), y_pred.max())) >= n_classes:
        raise MetricError("labels out of range")
    n = y_true.size
    k = n_classes

    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    diag = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, diag / np.where(predicted > 0, predicted, 1), 0.0)
        recall = np.where(support > 0, diag / np.where(support > 0, support, 1), 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / np.where(pr > 0, pr, 1), 0.0)

    weights = support / n
    accuracy = float(diag.sum() / n)

    auc = None
    if y_score is not None:
        scores = np.asarray(y_score, dtype=np.float64)
        if scores.ndim == 1:
            if k != 2:
                raise MetricError("1-d scores only make sense for binary tasks")
            pos = scores
        elif scores.shape == (n, k):
            pos = scores[:, 1]
        else:
            raise MetricError(f"scores must be (n, {k}), got {scores.shape}")
        if k == 2:
            auc = binary_auc(y_true == 1, pos)
        else:
            auc = _multiclass_auc(y_true, scores, k)

    return MetricSet(
        accuracy=accuracy,
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
        precision_weighted=float((weights * precision).sum()),
        recall_weighted=float((weights * recall).sum()),
        f1_weighted=float((weights * f1).sum()),
        precision_pos=float(precision[1]) if k == 2 else None,
        recall_pos=float(recall[1]) if k == 2 else None,
        f1_pos=float(f1[1]) if k == 2 else None,
        auc=auc,
        n=n,
    )


def random_baseline(y_true, seed: int, n_classes: int | None = None):
    """Uniform guesser: labels uniform over classes, scores uniform.

    Binary scores are uniform on [0, 1] for the positive class;
    multiclass score rows are uniform on the probability simplex.
    Returns (y_pred, scores).
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y_true.max()) + 1
    k = max(int(n_classes), 2)
    rng = np.random.default_rng(seed)
    y_pred = rng.integers(0, k, size=y_true.size)
    if k == 2:
        pos = rng.random(y_true.size)
        scores = np.column_stack([1.0 - pos, pos])
    else:
        scores = rng.dirichlet(np.ones(k), size=y_true.size)
    return y_pred, scores


def aggregate_metrics(sets) -> dict[str, tuple[float | None, float | None, int]]:
    """Fold-wise mean and population standard deviation per metric.

    Metrics that are None in a fold (undefined AUC, non-binary positive
    class) are left out of that metric's aggregation; the count of
    contributing folds is the third tuple slot.
    """
    out: dict[str, tuple[float | None, float | None, int]] = {}
    for name in METRIC_FIELDS:
        vals = [getattr(s, name) for s in sets if getattr(s, name) is not None]
        if not vals:
            out[name] = (None, None, 0)
            continue
        arr = np.asarray(vals, dtype=np.float64)
        out[name] = (float(arr.mean()), float(arr.std()), len(vals))
    return out
