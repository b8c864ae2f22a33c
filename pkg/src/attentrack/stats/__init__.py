"""Statistical battery: contingency tests, descriptives, mixed model."""

from .contingency import (
    CROSSTAB_FIELDS,
    Chi2Result,
    ContingencyTable,
    StatsError,
    chi_square,
    crosstab,
    table_from_counts,
)
from .descriptive import (
    GroupDescription,
    ResponseTimeRow,
    cohens_kappa,
    describe_by_group,
    response_time_table,
    tukey_hinges,
)
from .lmm import LMM_SCHEMA, LmmError, LmmFit, fit_lmm, fit_random_intercept

__all__ = [
    "CROSSTAB_FIELDS",
    "Chi2Result",
    "ContingencyTable",
    "StatsError",
    "chi_square",
    "crosstab",
    "table_from_counts",
    "GroupDescription",
    "ResponseTimeRow",
    "cohens_kappa",
    "describe_by_group",
    "response_time_table",
    "tukey_hinges",
    "LMM_SCHEMA",
    "LmmError",
    "LmmFit",
    "fit_lmm",
    "fit_random_intercept",
]
