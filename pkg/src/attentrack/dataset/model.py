"""Record and profile types for the experience-sampling dataset.

An EsmRecord is one answered in-situ probe: the phone context at
notification arrival, how the participant handled the notification, and
the self-reported attention level (1 to 5). Validation lives in the
constructors so an invalid record cannot exist in memory; file parsing
maps these errors to line numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from zoneinfo import ZoneInfo

TIME_OF_DAY_VALUES = ("morning", "afternoon", "evening", "night")

ACTIVITY_VALUES = (
    "sitting",
    "lying",
    "standing_still",
    "walking",
    "taking_elevator",
    "cycling_driving",
    "taking_transportation",
    "up_down_stairs",
    "running",
)

# Store-style app categories; notifications come from installed apps only,
# the foreground side additionally allows the launcher itself.
APP_CATEGORY_VALUES = (
    "communication",
    "social",
    "entertainment",
    "utilities",
    "shopping",
    "lifestyle",
    "music",
    "education",
    "productivity",
    "photo_video",
    "health_fitness",
    "system",
    "finance",
    "games",
    "news",
    "navigation",
    "travel",
    "food_drink",
    "books",
    "business",
    "weather",
    "sports",
)

HOME_SCREEN = "home_screen"
FOREGROUND_CATEGORY_VALUES = APP_CATEGORY_VALUES + (HOME_SCREEN,)

RESPONSE_BEHAVIOR_VALUES = (
    "click_to_view",
    "swipe_clear",
    "swipe_cancel_popup",
    "ignore",
    "didnt_notice",
    "adjust_settings",
)

# "ignore" and "didnt_notice" both leave the notification untouched; the
# coarse view merges them because only the participant's report, not the
# phone log, can tell them apart.
COARSE_BEHAVIOR_VALUES = (
    "click_to_view",
    "swipe_clear",
    "swipe_cancel_popup",
    "no_response",
    "adjust_settings",
)

GENDER_VALUES = ("male", "female")
OCCUPATION_VALUES = ("studying", "working")
ROUND_VALUES = (1, 2)
ATTENTION_VALUES = (1, 2, 3, 4, 5)


class SchemaError(ValueError):
    """A record or profile field violates the schema.

    ``field`` names the offending field so parse errors can point at it.
    """

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


def _require_enum(field_name: str, value: object, allowed: tuple) -> None:
    if value not in allowed:
        raise SchemaError(
            field_name,
            f"unknown value {value!r}, allowed: {', '.join(str(a) for a in allowed)}",
        )


def _require_vec3(field_name: str, value) -> tuple[float, float, float] | None:
    if value is None:
        return None
    try:
        x, y, z = value
        vec = (float(x), float(y), float(z))
    except (TypeError, ValueError):
        raise SchemaError(field_name, f"expected three numbers, got {value!r}") from None
    for c in vec:
        if c != c or c in (float("inf"), float("-inf")):
            raise SchemaError(field_name, "components must be finite")
    return vec


def coarsen_behavior(behavior: str) -> str:
    """Map the six logged response behaviors onto the five coarse ones."""
    _require_enum("response_behavior", behavior, RESPONSE_BEHAVIOR_VALUES)
    if behavior in ("ignore", "didnt_notice"):
        return "no_response"
    return behavior


def time_of_day_for_hour(hour: int) -> str:
    if 6 <= hour < 12:
        return "morning"
    if 12 <= hour < 18:
        return "afternoon"
    if 18 <= hour < 24:
        return "evening"
    return "night"


@dataclass(frozen=True)
class TimeFields:
    time_of_day: str
    day_of_week: int
    weekday: bool


def derive_time_fields(clicked_at: int, tz: str = "UTC") -> TimeFields:
    """Clock-derived fields for a response timestamp, in the given zone."""
    local = datetime.fromtimestamp(clicked_at, ZoneInfo(tz))
    dow = local.weekday()
    return TimeFields(
        time_of_day=time_of_day_for_hour(local.hour),
        day_of_week=dow,
        weekday=dow < 5,
    )


@dataclass(frozen=True)
class EsmRecord:
    user_id: str
    round: int
    received_at: int
    clicked_at: int
    weekday: bool
    day_of_week: int
    time_of_day: str
    activity: str
    foreground_app: str
    foreground_category: str
    notif_app: str
    notif_category: str
    response_behavior: str
    attention: int
    accel: tuple[float, float, float] | None = None
    gyro: tuple[float, float, float] | None = None
    codes: tuple[str, ...] = ()
    motivation_text: str | None = None

    def __post_init__(self):
        if not self.user_id:
            raise SchemaError("user_id", "must be non-empty")
        _require_enum("round", self.round, ROUND_VALUES)
        if self.clicked_at < self.received_at:
            raise SchemaError(
                "clicked_at",
                f"precedes received_at ({self.clicked_at} < {self.received_at})",
            )
        _require_enum("time_of_day", self.time_of_day, TIME_OF_DAY_VALUES)
        if not isinstance(self.day_of_week, int) or not 0 <= self.day_of_week <= 6:
            raise SchemaError("day_of_week", f"must be an integer in [0, 6], got {self.day_of_week!r}")
        _require_enum("activity", self.activity, ACTIVITY_VALUES)
        if not self.foreground_app:
            raise SchemaError("foreground_app", "must be non-empty")
        _require_enum("foreground_category", self.foreground_category, FOREGROUND_CATEGORY_VALUES)
        if not self.notif_app:
            raise SchemaError("notif_app", "must be non-empty")
        _require_enum("notif_category", self.notif_category, APP_CATEGORY_VALUES)
        _require_enum("response_behavior", self.response_behavior, RESPONSE_BEHAVIOR_VALUES)
        if self.attention not in ATTENTION_VALUES:
            raise SchemaError("attention", f"must be an integer in [1, 5], got {self.attention!r}")
        object.__setattr__(self, "accel", _require_vec3("accel", self.accel))
        object.__setattr__(self, "gyro", _require_vec3("gyro", self.gyro))
        if not isinstance(self.codes, tuple):
            object.__setattr__(self, "codes", tuple(self.codes))
        for c in self.codes:
            if not c:
                raise SchemaError("codes", "code ids must be non-empty")
        if len(set(self.codes)) != len(self.codes):
            raise SchemaError("codes", "duplicate code id")

    @property
    def response_time_s(self) -> int:
        return self.clicked_at - self.received_at

    @property
    def coarse_behavior(self) -> str:
        return coarsen_behavior(self.response_behavior)


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    gender: str
    age: int
    occupation: str
    education: str
    phone_brand: str
    rounds: tuple[int, ...] = (1,)

    def __post_init__(self):
        if not self.user_id:
            raise SchemaError("user_id", "must be non-empty")
        _require_enum("gender", self.gender, GENDER_VALUES)
        if not isinstance(self.age, int) or not 10 <= self.age <= 100:
            raise SchemaError("age", f"must be an integer in [10, 100], got {self.age!r}")
        _require_enum("occupation", self.occupation, OCCUPATION_VALUES)
        if not self.education:
            raise SchemaError("education", "must be non-empty")
        if not self.phone_brand:
            raise SchemaError("phone_brand", "must be non-empty")
        if not isinstance(self.rounds, tuple):
            object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise SchemaError("rounds", "must list at least one round")
        for r in self.rounds:
            _require_enum("rounds", r, ROUND_VALUES)
        if len(set(self.rounds)) != len(self.rounds):
            raise SchemaError("rounds", "duplicate round")
