"""Synthetic dataset generator with planted, recoverable structure.

The generative story, per user: draw a random intercept u_i for
response time; per record, draw an activity from a marginal, attention
conditioned on the activity, a coarse response behavior conditioned on
attention, and a response time

    rt = max(floor, round(b0 + b1 * A + b2 * A^2 + u_i + eps))

so classifiers can recover attention from context and behavior, and the
random-intercept model can recover the planted coefficients. Shuffling
the attention column in place destroys exactly that signal while
leaving every marginal distribution intact, which is what permutation
baselines need.

Everything derives from the config seed via per-user streams, so
generation is order-independent and reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import (
    ACTIVITY_VALUES,
    APP_CATEGORY_VALUES,
    COARSE_BEHAVIOR_VALUES,
    DEFAULT_TAXONOMY,
    FOREGROUND_CATEGORY_VALUES,
    HOME_SCREEN,
    Dataset,
    EsmRecord,
    UserProfile,
    derive_time_fields,
)
from .seeding import rng_for

SYNTH_SCHEMA = "attentrack-synth/1"


class SynthError(ValueError):
    pass


def _normalized(weights) -> tuple[float, ...]:
    total = float(sum(weights))
    return tuple(w / total for w in weights)


def _check_dist(name: str, dist, size: int) -> None:
    if len(dist) != size:
        raise SynthError(f"{name}: expected {size} probabilities, got {len(dist)}")
    for v in dist:
        if not 0.0 <= v <= 1.0:
            raise SynthError(f"{name}: probabilities must be in [0, 1]")
    if not math.isclose(sum(dist), 1.0, abs_tol=1e-9):
        raise SynthError(f"{name}: probabilities must sum to 1, got {sum(dist)!r}")


@dataclass(frozen=True)
class ResponseTimeLaw:
    beta0: float = 26.49
    beta1: float = 18.82
    beta2: float = -1.32
    sigma_u2: float = 648.27
    sigma2: float = 900.0
    floor: int = 1

    def __post_init__(self):
        if self.sigma_u2 < 0:
            raise SynthError("sigma_u2 must be non-negative")
        if self.sigma2 <= 0:
            raise SynthError("sigma2 must be positive")
        if self.floor < 0:
            raise SynthError("floor must be non-negative")


# Attention given activity: sedentary and transit contexts skew
# unfocused, self-paced locomotion skews focused.
_ATTENTION_GIVEN_ACTIVITY = (
    (0.30, 0.15, 0.20, 0.15, 0.20),  # sitting
    (0.45, 0.20, 0.15, 0.10, 0.10),  # lying
    (0.30, 0.20, 0.20, 0.15, 0.15),  # standing_still
    (0.40, 0.20, 0.15, 0.15, 0.10),  # walking
    (0.45, 0.25, 0.15, 0.10, 0.05),  # taking_elevator
    (0.05, 0.10, 0.15, 0.25, 0.45),  # cycling_driving
    (0.35, 0.25, 0.20, 0.10, 0.10),  # taking_transportation
    (0.40, 0.25, 0.15, 0.10, 0.10),  # up_down_stairs
    (0.05, 0.05, 0.15, 0.25, 0.50),  # running
)

# Coarse behavior given attention: the unfocused click, the focused let
# it sit.
_BEHAVIOR_GIVEN_ATTENTION = (
    (0.70, 0.12, 0.08, 0.09, 0.01),
    (0.55, 0.20, 0.10, 0.14, 0.01),
    (0.35, 0.25, 0.12, 0.27, 0.01),
    (0.18, 0.18, 0.10, 0.53, 0.01),
    (0.06, 0.06, 0.06, 0.81, 0.01),
)

_ACTIVITY_MARGINAL = (0.62, 0.14, 0.08, 0.09, 0.004, 0.022, 0.034, 0.009, 0.001)

_NOTIF_WEIGHTS = (
    30, 20, 8, 5, 5, 4, 3, 3, 4, 2, 2, 4, 3, 2, 3, 0.5, 0.5, 1, 0.5, 0.3, 0.5, 0.2,
)

_FOREGROUND_WEIGHTS = (
    15, 15, 10, 4, 3, 3, 2, 2, 3, 2, 1, 2, 1, 3, 2, 0.5, 0.5, 1, 0.5, 0.3, 0.5, 0.2, 35,
)

_MOTION_SCALE = {
    "sitting": 0.3,
    "lying": 0.2,
    "standing_still": 0.3,
    "walking": 1.2,
    "taking_elevator": 0.5,
    "cycling_driving": 1.5,
    "taking_transportation": 1.0,
    "up_down_stairs": 1.4,
    "running": 2.5,
}

# Coarse behavior -> motivation factor the sampled code tends to come from.
_BEHAVIOR_FACTOR = {
    "click_to_view": "actionability",
    "swipe_clear": "content_noise",
    "swipe_cancel_popup": "entertainment",
    "no_response": "cognitive_engagement",
    "adjust_settings": "habits",
}

_EDUCATIONS = ("high_school", "bachelor", "master", "phd")
_PHONE_BRANDS = ("brand_a", "brand_b", "brand_c", "brand_d", "brand_e")


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 20
    records_per_user: tuple[int, int] = (250, 350)
    activity_marginal: tuple[float, ...] = _ACTIVITY_MARGINAL
    attention_given_activity: tuple[tuple[float, ...], ...] = _ATTENTION_GIVEN_ACTIVITY
    behavior_given_attention: tuple[tuple[float, ...], ...] = _BEHAVIOR_GIVEN_ATTENTION
    notif_category_marginal: tuple[float, ...] = _normalized(_NOTIF_WEIGHTS)
    foreground_category_marginal: tuple[float, ...] = _normalized(_FOREGROUND_WEIGHTS)
    response_time: ResponseTimeLaw = ResponseTimeLaw()
    span: tuple[int, int] = (1_700_000_000, 1_703_600_000)
    sensor_presence: float = 0.9
    fine_no_response_ignore_share: float = 0.8
    code_rate: float = 0.6
    tz: str = "UTC"
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1:
            raise SynthError("n_users must be at least 1")
        lo, hi = self.records_per_user
        if lo < 1 or hi < lo:
            raise SynthError("records_per_user must be (lo, hi) with 1 <= lo <= hi")
        _check_dist("activity_marginal", self.activity_marginal, len(ACTIVITY_VALUES))
        if len(self.attention_given_activity) != len(ACTIVITY_VALUES):
            raise SynthError("attention_given_activity needs one row per activity")
        for i, row in enumerate(self.attention_given_activity):
            _check_dist(f"attention_given_activity[{i}]", row, 5)
        if len(self.behavior_given_attention) != 5:
            raise SynthError("behavior_given_attention needs one row per attention level")
        for i, row in enumerate(self.behavior_given_attention):
            _check_dist(f"behavior_given_attention[{i}]", row, len(COARSE_BEHAVIOR_VALUES))
        _check_dist("notif_category_marginal", self.notif_category_marginal,
                    len(APP_CATEGORY_VALUES))
        _check_dist("foreground_category_marginal", self.foreground_category_marginal,
                    len(FOREGROUND_CATEGORY_VALUES))
        if self.span[0] >= self.span[1]:
            raise SynthError("span must be (start, end) with start < end")
        for name in ("sensor_presence", "fine_no_response_ignore_share", "code_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SynthError(f"{name} must be in [0, 1]")

    def to_json_dict(self) -> dict:
        obj = asdict(self)
        obj["schema"] = SYNTH_SCHEMA
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SynthConfig":
        obj = dict(obj)
        if obj.pop("schema", SYNTH_SCHEMA) != SYNTH_SCHEMA:
            raise SynthError("unsupported synth config schema")
        try:
            law = ResponseTimeLaw(**obj.pop("response_time"))
            obj["records_per_user"] = tuple(obj["records_per_user"])
            obj["activity_marginal"] = tuple(obj["activity_marginal"])
            obj["attention_given_activity"] = tuple(
                tuple(r) for r in obj["attention_given_activity"]
            )
            obj["behavior_given_attention"] = tuple(
                tuple(r) for r in obj["behavior_given_attention"]
            )
            obj["notif_category_marginal"] = tuple(obj["notif_category_marginal"])
            obj["foreground_category_marginal"] = tuple(obj["foreground_category_marginal"])
            obj["span"] = tuple(obj["span"])
            return cls(response_time=law, **obj)
        except (KeyError, TypeError) as exc:
            raise SynthError(f"malformed synth config: {exc}") from None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def load_config(path) -> SynthConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return SynthConfig.from_json_dict(json.load(fh))


def _sample_codes(rng: np.random.Generator, behavior: str, code_rate: float,
                  factor_codes: dict[str, tuple[str, ...]]) -> tuple[str, ...]:
    if rng.random() >= code_rate:
        return ()
    if rng.random() < 0.7:
        pool = factor_codes[_BEHAVIOR_FACTOR[behavior]]
    else:
        pool = factor_codes["busyness"]
    codes = [pool[rng.integers(0, len(pool))]]
    if rng.random() < 0.3:
        pool2 = factor_codes["relevance"]
        extra = pool2[rng.integers(0, len(pool2))]
        if extra not in codes:
            codes.append(extra)
    return tuple(codes)


def _user_records(cfg: SynthConfig, user_id: str, user_index: int, round_no: int,
                  factor_codes: dict[str, tuple[str, ...]]) -> list[EsmRecord]:
    rng = rng_for(cfg.seed, "user", user_index)
    lo, hi = cfg.records_per_user
    n = int(rng.integers(lo, hi + 1))
    law = cfg.response_time
    u_i = rng.normal(0.0, math.sqrt(law.sigma_u2)) if law.sigma_u2 > 0 else 0.0

    received = np.sort(rng.integers(cfg.span[0], cfg.span[1], size=n)) + np.arange(n)
    activities = rng.choice(len(ACTIVITY_VALUES), size=n, p=cfg.activity_marginal)
    attention = np.zeros(n, dtype=np.int64)
    for a in range(len(ACTIVITY_VALUES)):
        mask = activities == a
        if mask.any():
            attention[mask] = rng.choice(5, size=int(mask.sum()),
                                         p=cfg.attention_given_activity[a]) + 1
    behavior_idx = np.zeros(n, dtype=np.int64)
    for lvl in range(1, 6):
        mask = attention == lvl
        if mask.any():
            behavior_idx[mask] = rng.choice(
                len(COARSE_BEHAVIOR_VALUES), size=int(mask.sum()),
                p=cfg.behavior_given_attention[lvl - 1],
            )
    eps = rng.normal(0.0, math.sqrt(law.sigma2), size=n)
    a_f = attention.astype(np.float64)
    rt = np.maximum(
        law.floor,
        np.rint(law.beta0 + law.beta1 * a_f + law.beta2 * a_f * a_f + u_i + eps),
    ).astype(np.int64)

    notif_cats = rng.choice(len(APP_CATEGORY_VALUES), size=n, p=cfg.notif_category_marginal)
    fg_cats = rng.choice(len(FOREGROUND_CATEGORY_VALUES), size=n,
                         p=cfg.foreground_category_marginal)

    records: list[EsmRecord] = []
    used: set[tuple[int, str]] = set()
    for j in range(n):
        coarse = COARSE_BEHAVIOR_VALUES[behavior_idx[j]]
        if coarse == "no_response":
            fine = ("ignore" if rng.random() < cfg.fine_no_response_ignore_share
                    else "didnt_notice")
        else:
            fine = coarse
        notif_cat = APP_CATEGORY_VALUES[notif_cats[j]]
        notif_app = f"app_{notif_cat}_{rng.integers(1, 4)}"
        fg_cat = FOREGROUND_CATEGORY_VALUES[fg_cats[j]]
        fg_app = HOME_SCREEN if fg_cat == HOME_SCREEN else f"app_{fg_cat}_{rng.integers(1, 4)}"
        clicked = int(received[j] + rt[j])
        while (clicked, notif_app) in used:
            clicked += 1
        used.add((clicked, notif_app))

        scale = _MOTION_SCALE[ACTIVITY_VALUES[activities[j]]]
        if rng.random() < cfg.sensor_presence:
            accel = (
                float(rng.normal(0.0, 0.8 * scale)),
                float(rng.normal(0.0, 0.8 * scale)),
                float(9.8 + rng.normal(0.0, 0.5 * scale)),
            )
            gyro = tuple(float(rng.normal(0.0, 0.15 * scale)) for _ in range(3))
        else:
            accel = None
            gyro = None

        tf = derive_time_fields(clicked, cfg.tz)
        records.append(
            EsmRecord(
                user_id=user_id,
                round=round_no,
                received_at=int(received[j]),
                clicked_at=clicked,
                weekday=tf.weekday,
                day_of_week=tf.day_of_week,
                time_of_day=tf.time_of_day,
                activity=ACTIVITY_VALUES[activities[j]],
                accel=accel,
                gyro=gyro,
                foreground_app=fg_app,
                foreground_category=fg_cat,
                notif_app=notif_app,
                notif_category=notif_cat,
                response_behavior=fine,
                attention=int(attention[j]),
                codes=_sample_codes(rng, coarse, cfg.code_rate, factor_codes),
                motivation_text=None,
            )
        )
    return records


def _user_profile(cfg: SynthConfig, user_id: str, user_index: int, round_no: int) -> UserProfile:
    rng = rng_for(cfg.seed, "profile", user_index)
    return UserProfile(
        user_id=user_id,
        gender="female" if rng.random() < 0.5 else "male",
        age=int(rng.integers(18, 46)),
        occupation="studying" if rng.random() < 0.8 else "working",
        education=_EDUCATIONS[rng.integers(0, len(_EDUCATIONS))],
        phone_brand=_PHONE_BRANDS[rng.integers(0, len(_PHONE_BRANDS))],
        rounds=(round_no,),
    )


def generate(cfg: SynthConfig = SynthConfig()) -> Dataset:
    """Generate a full dataset (records, profiles, default taxonomy)."""
    factor_codes = {
        fac.id: tuple(c.id for c in fac.codes)
        for cat in DEFAULT_TAXONOMY.categories
        for fac in cat.factors
    }
    width = max(2, len(str(cfg.n_users)))
    records: list[EsmRecord] = []
    profiles: list[UserProfile] = []
    for i in range(cfg.n_users):
        user_id = f"u{i + 1:0{width}d}"
        round_no = 1 if i < (cfg.n_users + 1) // 2 else 2
        records.extend(_user_records(cfg, user_id, i, round_no, factor_codes))
        profiles.append(_user_profile(cfg, user_id, i, round_no))
    return Dataset(
        records=tuple(records),
        profiles=tuple(profiles),
        taxonomy=DEFAULT_TAXONOMY,
        tz=cfg.tz,
    )


def shuffle_labels(ds: Dataset, seed: int) -> Dataset:
    """Permute the attention column across all records, leave the rest."""
    rng = rng_for(seed, "shuffle")
    perm = rng.permutation(len(ds.records))
    shuffled = tuple(
        replace(rec, attention=ds.records[perm[i]].attention)
        for i, rec in enumerate(ds.records)
    )
    return replace(ds, records=shuffled)
