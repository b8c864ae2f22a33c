"""Evaluation: metrics, hold-out protocols, report rendering."""

from .metrics import (
    METRIC_FIELDS,
    MetricError,
    MetricSet,
    aggregate_metrics,
    binary_auc,
    compute_metrics,
    random_baseline,
)
from .protocols import (
    ABLATION_SCHEMES,
    DEFAULT_FRACTIONS,
    AblationReport,
    EvalError,
    FoldResult,
    GroupReport,
    GroupRow,
    IncrementalReport,
    IncrementalRow,
    LouoReport,
    PersonalizationReport,
    PersonalRow,
    fit_model,
    model_kind,
    run_ablation,
    run_group_model,
    run_incremental,
    run_louo,
    run_personalization,
    scatter_scores,
)
from .reports import REPORT_SCHEMA, render_report, write_report

__all__ = [
    "METRIC_FIELDS",
    "MetricError",
    "MetricSet",
    "aggregate_metrics",
    "binary_auc",
    "compute_metrics",
    "random_baseline",
    "ABLATION_SCHEMES",
    "DEFAULT_FRACTIONS",
    "AblationReport",
    "EvalError",
    "FoldResult",
    "GroupReport",
    "GroupRow",
    "IncrementalReport",
    "IncrementalRow",
    "LouoReport",
    "PersonalizationReport",
    "PersonalRow",
    "fit_model",
    "model_kind",
    "run_ablation",
    "run_group_model",
    "run_incremental",
    "run_louo",
    "run_personalization",
    "scatter_scores",
    "REPORT_SCHEMA",
    "render_report",
    "write_report",
]
