"""Tree learners: CART, bagged forests, gradient boosting."""

from .cart import DecisionTree, TreeError, TreeParams, fit_tree, midpoint_threshold
from .ensemble import (
    MODEL_SCHEMA,
    EnsembleModel,
    ForestParams,
    GbmParams,
    balanced_weights,
    fit_forest,
    fit_gbm,
    multinomial_deviance,
    softmax_rows,
)

__all__ = [
    "DecisionTree",
    "TreeError",
    "TreeParams",
    "fit_tree",
    "midpoint_threshold",
    "MODEL_SCHEMA",
    "EnsembleModel",
    "ForestParams",
    "GbmParams",
    "balanced_weights",
    "fit_forest",
    "fit_gbm",
    "multinomial_deviance",
    "softmax_rows",
]
