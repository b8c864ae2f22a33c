"""Binary decision trees grown by exhaustive threshold search.

Candidate thresholds are midpoints between consecutive distinct sorted
values of a feature. The split kept is the one with the largest node
impurity decrease; ties go to the lowest feature index, then the lowest
threshold. Growth stops on depth, on minimum sample counts, or when the
best decrease is not strictly above ``min_impurity_decrease``.

Two criteria:

* "gini" for classification. Decrease at a node is
  ``g(parent) - (W_l * g(left) + W_r * g(right)) / W`` with weighted
  class proportions.
* "friedman_mse" for regression. The score is the mean-shift form
  ``W_l * W_r * (mean_l - mean_r)^2 / (W_l + W_r)``, which ranks splits
  identically to the within-node squared-error decrease.

The search is vectorized: per node, one argsort over the sampled
feature columns and cumulative sums over the sorted rows score every
boundary at once. ``min_samples_leaf`` and ``min_samples_split`` count
rows, not weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..seeding import derive_seed


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class TreeParams:
    criterion: str = "gini"  # "gini" or "friedman_mse"
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_impurity_decrease: float = 0.0
    max_features: str = "all"  # "all" or "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.criterion not in ("gini", "friedman_mse"):
            raise TreeError(f"unknown criterion {self.criterion!r}")
        if self.max_features not in ("all", "sqrt"):
            raise TreeError(f"unknown max_features {self.max_features!r}")
        if self.min_samples_split < 2:
            raise TreeError("min_samples_split must be at least 2")
        if self.min_samples_leaf < 1:
            raise TreeError("min_samples_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise TreeError("max_depth must be at least 1 when set")


@dataclass
class DecisionTree:
    """Flat-array tree. ``feature < 0`` marks leaves.

    ``value`` holds the class distribution per node for classification
    (rows sum to 1) and the weighted mean response for regression.
    """

    feature: np.ndarray      # (n_nodes,) int32
    threshold: np.ndarray    # (n_nodes,) float64, nan at leaves
    left: np.ndarray         # (n_nodes,) int32, -1 at leaves
    right: np.ndarray        # (n_nodes,) int32
    value: np.ndarray        # (n_nodes, K) or (n_nodes,)
    n_node_samples: np.ndarray  # (n_nodes,) int64
    gain: np.ndarray         # (n_nodes,) float64, 0 at leaves
    n_features: int
    n_classes: int           # 0 for regression

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        out = 0
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
            else:
                out = max(out, int(depth[node]))
        return out

    def leaf_ids(self) -> np.ndarray:
        return np.where(self.feature < 0)[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for each row."""
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[idx] >= 0
            if not internal.any():
                return idx
            at = np.where(internal)[0]
            cur = idx[at]
            go_left = X[at, self.feature[cur]] <= self.threshold[cur]
            idx[at] = np.where(go_left, self.left[cur], self.right[cur])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        thr = [None if self.feature[i] < 0 else float(self.threshold[i]) for i in range(self.n_nodes)]
        return {
            "feature": self.feature.tolist(),
            "threshold": thr,
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_node_samples": self.n_node_samples.tolist(),
            "gain": self.gain.tolist(),
            "n_features": self.n_features,
            "n_classes": self.n_classes,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DecisionTree":
        thr = np.array(
            [math.nan if t is None else t for t in obj["threshold"]], dtype=np.float64
        )
        return cls(
            feature=np.array(obj["feature"], dtype=np.int32),
            threshold=thr,
            left=np.array(obj["left"], dtype=np.int32),
            right=np.array(obj["right"], dtype=np.int32),
            value=np.array(obj["value"], dtype=np.float64),
            n_node_samples=np.array(obj["n_node_samples"], dtype=np.int64),
            gain=np.array(obj["gain"], dtype=np.float64),
            n_features=int(obj["n_features"]),
            n_classes=int(obj["n_classes"]),
        )


def _best_split_gini(cols, ws, Ys, msl, min_dec):
    """Score every boundary of every column; return (boundary, col, decrease) or None."""
    n, m = cols.shape
    order = np.argsort(cols, axis=0)
    sv = np.take_along_axis(cols, order, axis=0)
    WS = np.cumsum(ws[order], axis=0)            # (n, m) prefix weight
    CW = np.cumsum(Ys[order], axis=0)            # (n, m, K) prefix class weight
    W = WS[-1, 0]
    counts = CW[-1, 0]
    p = counts / W
    g_parent = 1.0 - np.sum(p * p)

    WL = WS[:-1]
    WR = W - WL
    PL = CW[:-1] / WL[:, :, None]
    GL = 1.0 - np.sum(PL * PL, axis=-1)
    CR = CW[-1:] - CW[:-1]
    PR = CR / WR[:, :, None]
    GR = 1.0 - np.sum(PR * PR, axis=-1)
    dec = g_parent - (WL * GL + WR * GR) / W

    sizes = np.arange(1, n)
    ok = (sv[1:] > sv[:-1]) & ((sizes >= msl) & (n - sizes >= msl))[:, None]
    dec = np.where(ok, dec, -np.inf)

    bi = np.argmax(dec, axis=0)
    bv = dec[bi, np.arange(m)]
    j = int(np.argmax(bv))
    if not (bv[j] > min_dec):
        return None
    return int(bi[j]), j, float(bv[j]), order, sv


def _best_split_friedman(cols, ws, wy, msl, min_dec):
    n, m = cols.shape
    order = np.argsort(cols, axis=0)
    sv = np.take_along_axis(cols, order, axis=0)
    WS = np.cumsum(ws[order], axis=0)
    SY = np.cumsum(wy[order], axis=0)
    W = WS[-1, 0]
    S = SY[-1, 0]

    WL = WS[:-1]
    WR = W - WL
    ML = SY[:-1] / WL
    MR = (S - SY[:-1]) / WR
    d = ML - MR
    imp = WL * WR * (d * d) / W

    sizes = np.arange(1, n)
    ok = (sv[1:] > sv[:-1]) & ((sizes >= msl) & (n - sizes >= msl))[:, None]
    imp = np.where(ok, imp, -np.inf)

    bi = np.argmax(imp, axis=0)
    bv = imp[bi, np.arange(m)]
    j = int(np.argmax(bv))
    if not (bv[j] > min_dec):
        return None
    return int(bi[j]), j, float(bv[j]), order, sv


def midpoint_threshold(lo: float, hi: float) -> float:
    """Midpoint of two distinct floats, nudged down if rounding hits ``hi``."""
    thr = (lo + hi) / 2.0
    if thr >= hi:
        thr = lo
    return thr


def fit_tree(X, y, w=None, params: TreeParams = TreeParams(), n_classes: int | None = None,
             rng: np.random.Generator | None = None) -> DecisionTree:
    """Grow one tree.

    For "gini", ``y`` are integer class indices in [0, n_classes). For
    "friedman_mse", ``y`` are float responses. ``w`` are positive sample
    weights (default 1). ``rng`` drives per-node feature subsampling;
    when omitted one is derived from ``params.seed``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TreeError("X must be a non-empty 2-d array")
    if not np.isfinite(X).all():
        raise TreeError("X must be finite")
    n, D = X.shape
    classification = params.criterion == "gini"
    if classification:
        y = np.asarray(y, dtype=np.int64)
        if y.shape != (n,):
            raise TreeError("y must have one label per row")
        K = int(n_classes) if n_classes is not None else int(y.max()) + 1
        if y.min() < 0 or y.max() >= K:
            raise TreeError("labels out of range")
    else:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (n,):
            raise TreeError("y must have one response per row")
        K = 0
    if w is None:
        w = np.ones(n, dtype=np.float64)
    else:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (n,) or (w <= 0).any():
            raise TreeError("weights must be positive, one per row")
    if rng is None:
        rng = np.random.default_rng(derive_seed(params.seed))

    if classification:
        Yw = np.zeros((n, K), dtype=np.float64)
        Yw[np.arange(n), y] = w
    else:
        wy = w * y

    m = D if params.max_features == "all" else math.ceil(math.sqrt(D))
    max_depth = math.inf if params.max_depth is None else params.max_depth
    msl = params.min_samples_leaf
    min_dec = params.min_impurity_decrease

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list = []
    n_samples: list[int] = []
    gain: list[float] = []

    def new_node(rows) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(math.nan)
        left.append(-1)
        right.append(-1)
        n_samples.append(rows.size)
        gain.append(0.0)
        if classification:
            counts = Yw[rows].sum(axis=0)
            value.append(counts / counts.sum())
        else:
            wsub = w[rows]
            value.append(float(wy[rows].sum() / wsub.sum()))
        return node

    # Depth-first, left child first; parent slots are patched as children
    # are allocated so node 0 is always the root.
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n, dtype=np.int64), 0, -1, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        node = new_node(rows)
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node

        nn = rows.size
        if depth >= max_depth or nn < params.min_samples_split or nn < 2 * msl:
            continue
        if classification:
            if np.count_nonzero(Yw[rows].sum(axis=0)) <= 1:
                continue
        else:
            ysub = y[rows]
            if ysub.min() == ysub.max():
                continue

        if m < D:
            feats = np.sort(rng.choice(D, size=m, replace=False))
        else:
            feats = np.arange(D)
        cols = X[np.ix_(rows, feats)]
        if classification:
            found = _best_split_gini(cols, w[rows], Yw[rows], msl, min_dec)
        else:
            found = _best_split_friedman(cols, w[rows], wy[rows], msl, min_dec)
        if found is None:
            continue
        bi, j, dec, order, sv = found
        thr = midpoint_threshold(float(sv[bi, j]), float(sv[bi + 1, j]))
        feature[node] = int(feats[j])
        threshold[node] = thr
        gain[node] = dec
        left_rows = rows[order[: bi + 1, j]]
        right_rows = rows[order[bi + 1 :, j]]
        stack.append((right_rows, depth + 1, node, False))
        stack.append((left_rows, depth + 1, node, True))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
        n_node_samples=np.array(n_samples, dtype=np.int64),
        gain=np.array(gain, dtype=np.float64),
        n_features=D,
        n_classes=K,
    )
