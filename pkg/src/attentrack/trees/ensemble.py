"""Bagged forests and gradient-boosted trees on top of the CART grower.

Both train on integer labels and report probabilities over the class
ids seen at fit time (ascending order).

Forest: each tree gets its own generator derived from (model seed, tree
index), draws a bootstrap sample from it, then uses it for per-node
feature subsampling, so trees are independent of build order. With
``class_weight="balanced"`` each sample is weighted n / (k * n_c) using
the class counts of the full training set, not the bootstrap draw.
Probabilities are the mean of per-tree leaf distributions.

Boosting: multinomial deviance on raw scores F (one column per class),
initialized at the log class priors. Each stage fits regression trees
to the residual Y - softmax(F) under the "friedman_mse" criterion and
replaces leaf values with a one-step Newton estimate; two-class
problems move only the positive column, which is the classic logistic
formulation, and K-class problems fit one tree per class with the
(K-1)/K damping. Probabilities are softmax(F).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from ..seeding import rng_for
from .cart import DecisionTree, TreeError, TreeParams, fit_tree

MODEL_SCHEMA = "attentrack-model/1"

# Floor for Newton leaf denominators and prior probabilities; a smaller
# mass would overflow the step anyway.
_EPS_DEN = 1e-150
_EPS_PRIOR = 1e-15


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    criterion: str = "gini"
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_impurity_decrease: float = 0.0
    max_features: str = "sqrt"
    class_weight: str = "balanced"  # "none" or "balanced"
    bootstrap: bool = True
    seed: int = 42

    def __post_init__(self):
        if self.n_estimators < 1:
            raise TreeError("n_estimators must be at least 1")
        if self.class_weight not in ("none", "balanced"):
            raise TreeError(f"unknown class_weight {self.class_weight!r}")


@dataclass(frozen=True)
class GbmParams:
    n_estimators: int = 100
    learning_rate: float = 0.1
    criterion: str = "friedman_mse"
    max_depth: int = 3
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_impurity_decrease: float = 0.0
    subsample: float = 1.0
    max_features: str = "all"
    seed: int = 42

    def __post_init__(self):
        if self.n_estimators < 1:
            raise TreeError("n_estimators must be at least 1")
        if not 0.0 < self.learning_rate:
            raise TreeError("learning_rate must be positive")
        if not 0.0 < self.subsample <= 1.0:
            raise TreeError("subsample must be in (0, 1]")


def softmax_rows(raw: np.ndarray) -> np.ndarray:
    """Probabilities from raw scores; equal scores give equal probabilities."""
    shifted = raw - raw.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def multinomial_deviance(raw: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of integer labels under softmax(raw)."""
    lse = logsumexp(raw, axis=1)
    return float(np.mean(lse - raw[np.arange(raw.shape[0]), y]))


def balanced_weights(y: np.ndarray, k: int) -> np.ndarray:
    """Per-sample weights n / (k * n_c); weighted class masses come out equal."""
    counts = np.bincount(y, minlength=k)
    if (counts == 0).any():
        raise TreeError("balanced weights need every class present")
    per_class = y.shape[0] / (k * counts.astype(np.float64))
    return per_class[y]


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TreeError("X must be a non-empty 2-d array")
    if y.shape != (X.shape[0],):
        raise TreeError("y must have one label per row")
    class_ids = np.unique(y)
    if class_ids.size < 2:
        raise TreeError("training data must contain at least two classes")
    return X, y, class_ids


@dataclass
class EnsembleModel:
    kind: str  # "forest" or "gbm"
    classes: tuple[str, ...]
    class_ids: tuple[int, ...]
    n_features: int
    params: ForestParams | GbmParams
    trees: tuple[DecisionTree, ...] = ()
    stages: tuple[tuple[DecisionTree, ...], ...] = ()
    init_raw: np.ndarray | None = None
    deviance_path: tuple[float, ...] = ()

    @property
    def n_classes(self) -> int:
        return len(self.class_ids)

    def _check_X(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise TreeError(f"expected {self.n_features} features, got {X.shape}")
        return X

    def raw_scores(self, X) -> np.ndarray:
        if self.kind != "gbm":
            raise TreeError("raw scores are only defined for boosted models")
        X = self._check_X(X)
        raw = np.tile(self.init_raw, (X.shape[0], 1))
        lr = self.params.learning_rate
        for stage in self.stages:
            if len(stage) == 1:
                raw[:, 1] += lr * stage[0].predict_value(X)
            else:
                for k, tree in enumerate(stage):
                    raw[:, k] += lr * tree.predict_value(X)
        return raw

    def predict_proba(self, X) -> np.ndarray:
        if self.kind == "forest":
            X = self._check_X(X)
            out = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
            for tree in self.trees:
                out += tree.predict_value(X)
            out /= len(self.trees)
            return out
        return softmax_rows(self.raw_scores(X))

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        ids = np.asarray(self.class_ids, dtype=np.int64)
        return ids[np.argmax(proba, axis=1)]

    def to_json_dict(self) -> dict:
        obj = {
            "schema": MODEL_SCHEMA,
            "kind": self.kind,
            "classes": list(self.classes),
            "class_ids": list(self.class_ids),
            "n_features": self.n_features,
            "params": asdict(self.params),
        }
        if self.kind == "forest":
            obj["trees"] = [t.to_dict() for t in self.trees]
        else:
            obj["stages"] = [[t.to_dict() for t in stage] for stage in self.stages]
            obj["init_raw"] = self.init_raw.tolist()
            obj["deviance_path"] = list(self.deviance_path)
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EnsembleModel":
        if obj.get("schema") != MODEL_SCHEMA:
            raise TreeError(f"unsupported model schema {obj.get('schema')!r}")
        kind = obj["kind"]
        if kind == "forest":
            params = ForestParams(**obj["params"])
            return cls(
                kind=kind,
                classes=tuple(obj["classes"]),
                class_ids=tuple(int(c) for c in obj["class_ids"]),
                n_features=int(obj["n_features"]),
                params=params,
                trees=tuple(DecisionTree.from_dict(t) for t in obj["trees"]),
            )
        if kind == "gbm":
            params = GbmParams(**obj["params"])
            return cls(
                kind=kind,
                classes=tuple(obj["classes"]),
                class_ids=tuple(int(c) for c in obj["class_ids"]),
                n_features=int(obj["n_features"]),
                params=params,
                stages=tuple(
                    tuple(DecisionTree.from_dict(t) for t in stage) for stage in obj["stages"]
                ),
                init_raw=np.array(obj["init_raw"], dtype=np.float64),
                deviance_path=tuple(obj["deviance_path"]),
            )
        raise TreeError(f"unknown model kind {kind!r}")

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EnsembleModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def _names_for(class_ids: np.ndarray, class_names) -> tuple[str, ...]:
    if class_names is None:
        return tuple(str(int(c)) for c in class_ids)
    return tuple(class_names[int(c)] for c in class_ids)


def fit_forest(X, y, params: ForestParams = ForestParams(), class_names=None) -> EnsembleModel:
    X, y, class_ids = _check_xy(X, y)
    n = X.shape[0]
    k = class_ids.size
    y01 = np.searchsorted(class_ids, y)
    if params.class_weight == "balanced":
        w = balanced_weights(y01, k)
    else:
        w = np.ones(n, dtype=np.float64)
    tp = TreeParams(
        criterion=params.criterion,
        max_depth=params.max_depth,
        min_samples_split=params.min_samples_split,
        min_samples_leaf=params.min_samples_leaf,
        min_impurity_decrease=params.min_impurity_decrease,
        max_features=params.max_features,
        seed=params.seed,
    )
    trees = []
    for t in range(params.n_estimators):
        rng = rng_for(params.seed, "tree", t)
        if params.bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        trees.append(fit_tree(X[idx], y01[idx], w[idx], tp, n_classes=k, rng=rng))
    return EnsembleModel(
        kind="forest",
        classes=_names_for(class_ids, class_names),
        class_ids=tuple(int(c) for c in class_ids),
        n_features=X.shape[1],
        params=params,
        trees=tuple(trees),
    )


def _newton_leaf_values(tree: DecisionTree, X, residual, p, damping: float) -> None:
    """Replace leaf means with one Newton step on the deviance."""
    leaves = tree.apply(X)
    num = np.bincount(leaves, weights=residual, minlength=tree.n_nodes) * damping
    den = np.bincount(leaves, weights=p * (1.0 - p), minlength=tree.n_nodes)
    values = np.zeros(tree.n_nodes, dtype=np.float64)
    nz = den >= _EPS_DEN
    values[nz] = num[nz] / den[nz]
    tree.value = values


def fit_gbm(X, y, params: GbmParams = GbmParams(), class_names=None) -> EnsembleModel:
    X, y, class_ids = _check_xy(X, y)
    n = X.shape[0]
    k = class_ids.size
    y01 = np.searchsorted(class_ids, y)
    Y = np.zeros((n, k), dtype=np.float64)
    Y[np.arange(n), y01] = 1.0

    priors = np.clip(np.bincount(y01, minlength=k) / n, _EPS_PRIOR, 1.0)
    init_raw = np.log(priors)
    raw = np.tile(init_raw, (n, 1))
    deviance = [multinomial_deviance(raw, y01)]

    tp = TreeParams(
        criterion="friedman_mse",
        max_depth=params.max_depth,
        min_samples_split=params.min_samples_split,
        min_samples_leaf=params.min_samples_leaf,
        min_impurity_decrease=params.min_impurity_decrease,
        max_features=params.max_features,
        seed=params.seed,
    )
    damping = 1.0 if k == 2 else (k - 1.0) / k
    lr = params.learning_rate
    stages = []
    for s in range(params.n_estimators):
        rng = rng_for(params.seed, "stage", s)
        if params.subsample < 1.0:
            inbag = rng.random(n) < params.subsample
            if not inbag.any():
                inbag[rng.integers(0, n)] = True
        else:
            inbag = np.ones(n, dtype=bool)
        Xb = X[inbag]
        P = softmax_rows(raw)
        stage_trees = []
        targets = (1,) if k == 2 else tuple(range(k))
        for c in targets:
            residual = Y[:, c] - P[:, c]
            tree = fit_tree(Xb, residual[inbag], None, tp, rng=rng)
            _newton_leaf_values(tree, Xb, residual[inbag], P[inbag, c], damping)
            raw[:, c] += lr * tree.predict_value(X)
            stage_trees.append(tree)
        stages.append(tuple(stage_trees))
        deviance.append(multinomial_deviance(raw, y01))

    return EnsembleModel(
        kind="gbm",
        classes=_names_for(class_ids, class_names),
        class_ids=tuple(int(c) for c in class_ids),
        n_features=X.shape[1],
        params=params,
        stages=tuple(stages),
        init_raw=init_raw,
        deviance_path=tuple(deviance),
    )
