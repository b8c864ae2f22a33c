"""Experience-sampling dataset: types, parsing, validation, filtering."""

from .model import (
    ACTIVITY_VALUES,
    APP_CATEGORY_VALUES,
    ATTENTION_VALUES,
    COARSE_BEHAVIOR_VALUES,
    FOREGROUND_CATEGORY_VALUES,
    GENDER_VALUES,
    HOME_SCREEN,
    OCCUPATION_VALUES,
    RESPONSE_BEHAVIOR_VALUES,
    ROUND_VALUES,
    TIME_OF_DAY_VALUES,
    EsmRecord,
    SchemaError,
    TimeFields,
    UserProfile,
    coarsen_behavior,
    derive_time_fields,
    time_of_day_for_hour,
)
from .taxonomy import (
    DEFAULT_TAXONOMY,
    Category,
    Code,
    CodeTaxonomy,
    Factor,
    TaxonomyError,
    load_taxonomy,
)
from .io import (
    PROFILE_COLUMNS,
    RECORD_COLUMNS,
    Dataset,
    DatasetError,
    ValidationReport,
    parse_dataset,
    parse_profiles_csv,
    parse_records_csv,
    parse_records_jsonl,
    validate_dataset,
    write_dataset,
    write_profiles_csv,
    write_records_csv,
    write_records_jsonl,
)
from .filters import FilterResult, filter_users

__all__ = [
    "ACTIVITY_VALUES",
    "APP_CATEGORY_VALUES",
    "ATTENTION_VALUES",
    "COARSE_BEHAVIOR_VALUES",
    "FOREGROUND_CATEGORY_VALUES",
    "GENDER_VALUES",
    "HOME_SCREEN",
    "OCCUPATION_VALUES",
    "RESPONSE_BEHAVIOR_VALUES",
    "ROUND_VALUES",
    "TIME_OF_DAY_VALUES",
    "EsmRecord",
    "SchemaError",
    "TimeFields",
    "UserProfile",
    "coarsen_behavior",
    "derive_time_fields",
    "time_of_day_for_hour",
    "DEFAULT_TAXONOMY",
    "Category",
    "Code",
    "CodeTaxonomy",
    "Factor",
    "TaxonomyError",
    "load_taxonomy",
    "PROFILE_COLUMNS",
    "RECORD_COLUMNS",
    "Dataset",
    "DatasetError",
    "ValidationReport",
    "parse_dataset",
    "parse_profiles_csv",
    "parse_records_csv",
    "parse_records_jsonl",
    "validate_dataset",
    "write_dataset",
    "write_profiles_csv",
    "write_records_csv",
    "write_records_jsonl",
    "FilterResult",
    "filter_users",
]
