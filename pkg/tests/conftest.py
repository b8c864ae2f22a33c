"""Shared builders for the test suite.

The record factory produces a minimal valid record whose clock fields are
derived from the timestamp, so tests only override what they exercise.
"""

from __future__ import annotations

import dataclasses

import pytest

from attentrack.dataset import Dataset, EsmRecord, UserProfile, derive_time_fields
from attentrack.synth import SynthConfig, generate

BASE_TS = 1_700_000_000


def make_record(**overrides) -> EsmRecord:
    received = overrides.pop("received_at", BASE_TS)
    clicked = overrides.pop("clicked_at", received + 30)
    tz = overrides.pop("tz", "UTC")
    tf = derive_time_fields(clicked, tz)
    fields = dict(
        user_id="u01",
        round=1,
        received_at=received,
        clicked_at=clicked,
        weekday=tf.weekday,
        day_of_week=tf.day_of_week,
        time_of_day=tf.time_of_day,
        activity="sitting",
        foreground_app="app_social_1",
        foreground_category="social",
        notif_app="app_communication_1",
        notif_category="communication",
        response_behavior="click_to_view",
        attention=3,
    )
    fields.update(overrides)
    return EsmRecord(**fields)


def make_profile(user_id: str = "u01", **overrides) -> UserProfile:
    fields = dict(
        user_id=user_id,
        gender="female",
        age=24,
        occupation="studying",
        education="bachelor",
        phone_brand="acme",
        rounds=(1,),
    )
    fields.update(overrides)
    return UserProfile(**fields)


def make_dataset(records, profiles=None) -> Dataset:
    if profiles is None:
        profiles = tuple(make_profile(u) for u in sorted({r.user_id for r in records}))
    return Dataset(records=tuple(records), profiles=tuple(profiles))


def replace_record(rec: EsmRecord, **changes) -> EsmRecord:
    return dataclasses.replace(rec, **changes)


@pytest.fixture(scope="session")
def synth_small() -> Dataset:
    """Six users at around 100 records each; enough for every protocol."""
    return generate(SynthConfig(n_users=6, records_per_user=(90, 110), seed=7))


@pytest.fixture(scope="session")
def synth_tiny() -> Dataset:
    """Four users at 40 records each; protocols must lower min_records."""
    return generate(SynthConfig(n_users=4, records_per_user=(40, 40), seed=11))
