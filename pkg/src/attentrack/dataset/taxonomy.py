"""Hierarchical codebook for self-reported attention motivations.

Open-ended motivation reports were coded into a three-level hierarchy:
high-level categories, factors within them, and leaf codes. Records
carry leaf code ids; the factor layer is what the factor-augmented
feature encoding consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Code:
    id: str
    label: str


@dataclass(frozen=True)
class Factor:
    id: str
    label: str
    codes: tuple[Code, ...]


@dataclass(frozen=True)
class Category:
    id: str
    label: str
    factors: tuple[Factor, ...]


class TaxonomyError(ValueError):
    pass


@dataclass(frozen=True)
class CodeTaxonomy:
    categories: tuple[Category, ...]

    def __post_init__(self):
        seen_cat: set[str] = set()
        seen_fac: set[str] = set()
        seen_code: set[str] = set()
        for cat in self.categories:
            if not cat.id or cat.id in seen_cat:
                raise TaxonomyError(f"duplicate or empty category id {cat.id!r}")
            seen_cat.add(cat.id)
            for fac in cat.factors:
                if not fac.id or fac.id in seen_fac:
                    raise TaxonomyError(f"duplicate or empty factor id {fac.id!r}")
                seen_fac.add(fac.id)
                for code in fac.codes:
                    if not code.id or code.id in seen_code:
                        raise TaxonomyError(f"duplicate or empty code id {code.id!r}")
                    seen_code.add(code.id)

    def code_ids(self) -> tuple[str, ...]:
        return tuple(
            code.id
            for cat in self.categories
            for fac in cat.factors
            for code in fac.codes
        )

    def factor_ids(self) -> tuple[str, ...]:
        return tuple(fac.id for cat in self.categories for fac in cat.factors)

    def category_ids(self) -> tuple[str, ...]:
        return tuple(cat.id for cat in self.categories)

    def factor_of(self, code_id: str) -> str:
        mapping = self.code_to_factor()
        if code_id not in mapping:
            raise TaxonomyError(f"unknown code id {code_id!r}")
        return mapping[code_id]

    def code_to_factor(self) -> dict[str, str]:
        return {
            code.id: fac.id
            for cat in self.categories
            for fac in cat.factors
            for code in fac.codes
        }

    @property
    def counts(self) -> tuple[int, int, int]:
        """(n_categories, n_factors, n_codes)."""
        return (
            len(self.categories),
            len(self.factor_ids()),
            len(self.code_ids()),
        )

    def to_json_dict(self) -> dict:
        return {
            "schema": "code-taxonomy/1",
            "categories": [
                {
                    "id": cat.id,
                    "label": cat.label,
                    "factors": [
                        {
                            "id": fac.id,
                            "label": fac.label,
                            "codes": [{"id": c.id, "label": c.label} for c in fac.codes],
                        }
                        for fac in cat.factors
                    ],
                }
                for cat in self.categories
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CodeTaxonomy":
        if obj.get("schema") != "code-taxonomy/1":
            raise TaxonomyError(f"unsupported taxonomy schema {obj.get('schema')!r}")
        try:
            cats = tuple(
                Category(
                    id=cat["id"],
                    label=cat["label"],
                    factors=tuple(
                        Factor(
                            id=fac["id"],
                            label=fac["label"],
                            codes=tuple(Code(id=c["id"], label=c["label"]) for c in fac["codes"]),
                        )
                        for fac in cat["factors"]
                    ),
                )
                for cat in obj["categories"]
            )
        except (KeyError, TypeError) as exc:
            raise TaxonomyError(f"malformed taxonomy json: {exc}") from None
        return cls(categories=cats)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=False)
            fh.write("\n")


def load_taxonomy(path) -> CodeTaxonomy:
    with open(path, "r", encoding="utf-8") as fh:
        return CodeTaxonomy.from_json_dict(json.load(fh))


def _f(fid: str, label: str, codes: list[tuple[str, str]]) -> Factor:
    return Factor(id=fid, label=label, codes=tuple(Code(id=c, label=lbl) for c, lbl in codes))


# 4 categories, 16 factors, 46 leaf codes.
DEFAULT_TAXONOMY = CodeTaxonomy(
    categories=(
        Category(
            id="notification_content",
            label="Notification content",
            factors=(
                _f("importance_stated", "Stated importance", [
                    ("stated_unimportant", "Said it was unimportant"),
                    ("stated_important", "Said it was important"),
                ]),
                _f("relevance", "Personal relevance", [
                    ("relevant_to_me", "Relevant to me"),
                    ("irrelevant_to_me", "Irrelevant to me"),
                    ("people_mentioned", "Specific people mentioned"),
                ]),
                _f("actionability", "Required action", [
                    ("needs_reply", "Needs a reply"),
                    ("answer_call", "Answer a call"),
                    ("dismiss_alarm", "Dismiss an alarm"),
                    ("check_verification_code", "Check a verification code"),
                ]),
                _f("content_noise", "Content noise", [
                    ("ads_marketing", "Ads or marketing"),
                    ("repeated_notification", "Repeated notification"),
                    ("already_seen_elsewhere", "Already seen elsewhere"),
                ]),
            ),
        ),
        Category(
            id="engagement_activity",
            label="Ongoing engagement and activity",
            factors=(
                _f("entertainment", "Entertainment", [
                    ("watching_media", "Watching media"),
                    ("leisure_phone_use", "Leisure phone use"),
                    ("browsing_apps", "Browsing apps"),
                    ("playing_games", "Playing games"),
                ]),
                _f("daily_life", "Daily life", [
                    ("eating", "Eating"),
                    ("commuting", "Commuting"),
                    ("doing_chores", "Doing chores"),
                    ("shopping_errands", "Shopping or errands"),
                    ("exercising", "Exercising"),
                ]),
                _f("cognitive_engagement", "Cognitive engagement", [
                    ("working", "Working"),
                    ("studying", "Studying"),
                    ("reading", "Reading"),
                    ("in_meeting", "In a meeting"),
                    ("in_class", "In class"),
                ]),
                _f("task_switching", "Task switching", [
                    ("just_finished_task", "Just finished a task"),
                    ("about_to_start_task", "About to start a task"),
                    ("between_tasks", "Between tasks"),
                ]),
                _f("socializing", "Socializing", [
                    ("chatting_in_person", "Chatting in person"),
                    ("on_call", "On a call"),
                    ("replying_messages", "Replying to messages"),
                ]),
                _f("sleep_or_rest", "Sleep or rest", [
                    ("sleeping", "Sleeping"),
                    ("resting", "Resting"),
                ]),
            ),
        ),
        Category(
            id="individual_state",
            label="Individual state",
            factors=(
                _f("busyness", "Level of busyness", [
                    ("busy", "Busy"),
                    ("free", "Free"),
                ]),
                _f("mental_state", "Mental state", [
                    ("focused_mind", "Focused"),
                    ("wandering_mind", "Mind wandering"),
                ]),
                _f("physical_state", "Physical state", [
                    ("tired", "Tired"),
                    ("energetic", "Energetic"),
                ]),
            ),
        ),
        Category(
            id="timing_habits",
            label="Timing and habits",
            factors=(
                _f("timing", "Timing", [
                    ("right_timing", "Right timing"),
                    ("poor_timing", "Poor timing"),
                ]),
                _f("habits", "Habits", [
                    ("habitual_check", "Habitual phone check"),
                    ("notification_overload", "Notification overload"),
                ]),
                _f("negligence", "Negligence", [
                    ("didnt_hear", "Did not hear it"),
                    ("forgot_phone", "Forgot the phone"),
                ]),
            ),
        ),
    )
)
