"""Participant-level exclusion rules applied before modeling.

Two rules: drop users with too few records to learn from, and drop
users whose attention reports are (almost) constant, since their data
carries no label signal and inflates per-user accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .io import Dataset


@dataclass(frozen=True)
class FilterResult:
    dataset: Dataset
    removed_low_count: tuple[str, ...]
    removed_constant: tuple[str, ...]

    def format(self) -> str:
        lines = []
        for u in self.removed_low_count:
            lines.append(f"removed {u}: fewer records than the minimum")
        for u in self.removed_constant:
            lines.append(f"removed {u}: attention nearly constant")
        lines.append(
            f"kept {len(self.dataset.users())} users, {len(self.dataset.records)} records"
        )
        return "\n".join(lines)


def filter_users(ds: Dataset, min_records: int = 80, drop_constant_attention: bool = True,
                 constant_share: float = 0.95) -> FilterResult:
    """Drop entire users by record count and label-variance rules.

    A user is "nearly constant" when a single attention level accounts
    for at least ``constant_share`` of their records. Both rules are
    evaluated on the incoming dataset, so the operation is idempotent.
    """
    per_user: dict[str, list[int]] = {}
    for rec in ds.records:
        per_user.setdefault(rec.user_id, []).append(rec.attention)

    low: list[str] = []
    constant: list[str] = []
    for user in sorted(per_user):
        labels = per_user[user]
        if len(labels) < min_records:
            low.append(user)
            continue
        if drop_constant_attention:
            top = max(labels.count(level) for level in set(labels))
            if top >= constant_share * len(labels):
                constant.append(user)

    removed = set(low) | set(constant)
    records = tuple(r for r in ds.records if r.user_id not in removed)
    kept_users = {r.user_id for r in records}
    profiles = tuple(p for p in ds.profiles if p.user_id in kept_users)
    return FilterResult(
        dataset=replace(ds, records=records, profiles=profiles),
        removed_low_count=tuple(low),
        removed_constant=tuple(constant),
    )
