"""Parsing, serialization, and whole-dataset validation.

On-disk formats:

* records CSV with a fixed 22-column header (codes are ``|``-joined,
  empty string means absent, sensor triples are either fully present or
  fully empty),
* records JSONL with one object per line and the same keys (native
  types, ``null`` for absent),
* profiles CSV (``rounds`` is ``|``-joined),
* taxonomy JSON (see taxonomy module).

Parsing is strict: the first malformed row aborts with the line number
and field name. ``parse_dataset . serialize`` is the identity on valid
datasets as long as the same time zone is passed back in.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .model import (
    EsmRecord,
    SchemaError,
    UserProfile,
    derive_time_fields,
)
from .taxonomy import DEFAULT_TAXONOMY, CodeTaxonomy, load_taxonomy

RECORD_COLUMNS = (
    "user_id",
    "round",
    "received_at",
    "clicked_at",
    "weekday",
    "day_of_week",
    "time_of_day",
    "activity",
    "accel_x",
    "accel_y",
    "accel_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "foreground_app",
    "foreground_category",
    "notif_app",
    "notif_category",
    "response_behavior",
    "attention",
    "codes",
    "motivation_text",
)

PROFILE_COLUMNS = (
    "user_id",
    "gender",
    "age",
    "occupation",
    "education",
    "phone_brand",
    "rounds",
)


class DatasetError(ValueError):
    """Malformed input file; message carries line and field when known."""


@dataclass(frozen=True)
class Dataset:
    records: tuple[EsmRecord, ...]
    profiles: tuple[UserProfile, ...] = ()
    taxonomy: CodeTaxonomy = DEFAULT_TAXONOMY
    tz: str = "UTC"

    def users(self) -> tuple[str, ...]:
        return tuple(sorted({r.user_id for r in self.records}))

    def records_of(self, user_id: str) -> tuple[EsmRecord, ...]:
        return tuple(r for r in self.records if r.user_id == user_id)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple[str, ...]
    warnings: tuple[str, ...]
    n_records: int
    n_users: int
    attention_counts: dict[int, int] = field(default_factory=dict)
    records_per_user: dict[str, int] = field(default_factory=dict)

    def format(self) -> str:
        lines = [
            f"records: {self.n_records}",
            f"users: {self.n_users}",
            "attention level counts: "
            + ", ".join(f"{k}={self.attention_counts.get(k, 0)}" for k in range(1, 6)),
        ]
        total_by_level = sum(self.attention_counts.values())
        if total_by_level != self.n_records:
            lines.append(
                f"note: per-level counts sum to {total_by_level}, dataset has {self.n_records}"
            )
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for e in self.errors:
            lines.append(f"error: {e}")
        lines.append("status: " + ("valid" if self.ok else "invalid"))
        return "\n".join(lines)


def _parse_int(line: int, name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise DatasetError(f"line {line}: {name}: expected an integer, got {raw!r}") from None


def _parse_bool(line: int, name: str, raw: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise DatasetError(f"line {line}: {name}: expected true or false, got {raw!r}")


def _parse_vec(line: int, name: str, raws: tuple[str, str, str]):
    present = [r != "" for r in raws]
    if not any(present):
        return None
    if not all(present):
        raise DatasetError(f"line {line}: {name}: all three components or none")
    try:
        return tuple(float(r) for r in raws)
    except ValueError:
        raise DatasetError(f"line {line}: {name}: expected three numbers") from None


def _record_from_row(row: dict[str, str], line: int) -> EsmRecord:
    try:
        return EsmRecord(
            user_id=row["user_id"],
            round=_parse_int(line, "round", row["round"]),
            received_at=_parse_int(line, "received_at", row["received_at"]),
            clicked_at=_parse_int(line, "clicked_at", row["clicked_at"]),
            weekday=_parse_bool(line, "weekday", row["weekday"]),
            day_of_week=_parse_int(line, "day_of_week", row["day_of_week"]),
            time_of_day=row["time_of_day"],
            activity=row["activity"],
            accel=_parse_vec(line, "accel", (row["accel_x"], row["accel_y"], row["accel_z"])),
            gyro=_parse_vec(line, "gyro", (row["gyro_x"], row["gyro_y"], row["gyro_z"])),
            foreground_app=row["foreground_app"],
            foreground_category=row["foreground_category"],
            notif_app=row["notif_app"],
            notif_category=row["notif_category"],
            response_behavior=row["response_behavior"],
            attention=_parse_int(line, "attention", row["attention"]),
            codes=tuple(c for c in row["codes"].split("|") if c != ""),
            motivation_text=row["motivation_text"] or None,
        )
    except SchemaError as exc:
        raise DatasetError(f"line {line}: {exc}") from None


def _check_record(rec: EsmRecord, line: int, taxonomy: CodeTaxonomy, tz: str,
                  check_time_fields: bool, seen: dict) -> None:
    known = taxonomy.code_to_factor()
    for c in rec.codes:
        if c not in known:
            raise DatasetError(f"line {line}: codes: unknown code id {c!r}")
    if check_time_fields:
        derived = derive_time_fields(rec.clicked_at, tz)
        for name, stored, want in (
            ("time_of_day", rec.time_of_day, derived.time_of_day),
            ("day_of_week", rec.day_of_week, derived.day_of_week),
            ("weekday", rec.weekday, derived.weekday),
        ):
            if stored != want:
                raise DatasetError(
                    f"line {line}: {name}: {stored!r} disagrees with clicked_at "
                    f"in zone {tz} (expected {want!r})"
                )
    key = (rec.user_id, rec.clicked_at, rec.notif_app)
    if key in seen:
        raise DatasetError(
            f"line {line}: duplicate record for (user_id, clicked_at, notif_app)="
            f"{key!r}, first seen at line {seen[key]}"
        )
    seen[key] = line


def parse_records_csv(path, taxonomy: CodeTaxonomy = DEFAULT_TAXONOMY, tz: str = "UTC",
                      check_time_fields: bool = True) -> tuple[EsmRecord, ...]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("line 1: missing header row") from None
        if tuple(header) != RECORD_COLUMNS:
            raise DatasetError(
                f"line 1: header mismatch, expected {','.join(RECORD_COLUMNS)}"
            )
        records = []
        seen: dict = {}
        for line, raw in enumerate(reader, start=2):
            if len(raw) != len(RECORD_COLUMNS):
                raise DatasetError(
                    f"line {line}: expected {len(RECORD_COLUMNS)} fields, got {len(raw)}"
                )
            rec = _record_from_row(dict(zip(RECORD_COLUMNS, raw)), line)
            _check_record(rec, line, taxonomy, tz, check_time_fields, seen)
            records.append(rec)
    return tuple(records)


def parse_records_jsonl(path, taxonomy: CodeTaxonomy = DEFAULT_TAXONOMY, tz: str = "UTC",
                        check_time_fields: bool = True) -> tuple[EsmRecord, ...]:
    records = []
    seen: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {line}: invalid json: {exc.msg}") from None
            missing = [c for c in RECORD_COLUMNS if c not in obj]
            if missing:
                raise DatasetError(f"line {line}: missing keys: {', '.join(missing)}")
            row = {}
            for col in RECORD_COLUMNS:
                v = obj[col]
                if v is None:
                    row[col] = ""
                elif isinstance(v, bool):
                    row[col] = "true" if v else "false"
                else:
                    row[col] = str(v)
            rec = _record_from_row(row, line)
            _check_record(rec, line, taxonomy, tz, check_time_fields, seen)
            records.append(rec)
    return tuple(records)


def parse_profiles_csv(path) -> tuple[UserProfile, ...]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("line 1: missing header row") from None
        if tuple(header) != PROFILE_COLUMNS:
            raise DatasetError(
                f"line 1: header mismatch, expected {','.join(PROFILE_COLUMNS)}"
            )
        profiles = []
        seen_users: dict[str, int] = {}
        for line, raw in enumerate(reader, start=2):
            if len(raw) != len(PROFILE_COLUMNS):
                raise DatasetError(
                    f"line {line}: expected {len(PROFILE_COLUMNS)} fields, got {len(raw)}"
                )
            row = dict(zip(PROFILE_COLUMNS, raw))
            try:
                prof = UserProfile(
                    user_id=row["user_id"],
                    gender=row["gender"],
                    age=_parse_int(line, "age", row["age"]),
                    occupation=row["occupation"],
                    education=row["education"],
                    phone_brand=row["phone_brand"],
                    rounds=tuple(
                        _parse_int(line, "rounds", r)
                        for r in row["rounds"].split("|")
                        if r != ""
                    ),
                )
            except SchemaError as exc:
                raise DatasetError(f"line {line}: {exc}") from None
            if prof.user_id in seen_users:
                raise DatasetError(
                    f"line {line}: duplicate profile for user {prof.user_id!r}, "
                    f"first seen at line {seen_users[prof.user_id]}"
                )
            seen_users[prof.user_id] = line
            profiles.append(prof)
    return tuple(profiles)


def parse_dataset(records_path, profiles_path=None, taxonomy_path=None, fmt: str | None = None,
                  tz: str = "UTC", check_time_fields: bool = True) -> Dataset:
    """Load a dataset from disk, validating as it goes.

    ``fmt`` is "csv" or "jsonl", inferred from the extension when None.
    ``tz`` is the IANA zone the clock fields were recorded in.
    """
    taxonomy = load_taxonomy(taxonomy_path) if taxonomy_path else DEFAULT_TAXONOMY
    if fmt is None:
        fmt = "jsonl" if str(records_path).endswith((".jsonl", ".ndjson")) else "csv"
    if fmt == "csv":
        records = parse_records_csv(records_path, taxonomy, tz, check_time_fields)
    elif fmt == "jsonl":
        records = parse_records_jsonl(records_path, taxonomy, tz, check_time_fields)
    else:
        raise DatasetError(f"unknown records format {fmt!r}")
    profiles = parse_profiles_csv(profiles_path) if profiles_path else ()
    ds = Dataset(records=records, profiles=profiles, taxonomy=taxonomy, tz=tz)
    if profiles:
        by_id = {p.user_id for p in profiles}
        for i, rec in enumerate(records):
            if rec.user_id not in by_id:
                raise DatasetError(
                    f"record {i}: user_id: {rec.user_id!r} has no profile"
                )
    return ds


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _record_row(rec: EsmRecord) -> list[str]:
    accel = rec.accel or ("", "", "")
    gyro = rec.gyro or ("", "", "")
    return [
        rec.user_id,
        str(rec.round),
        str(rec.received_at),
        str(rec.clicked_at),
        "true" if rec.weekday else "false",
        str(rec.day_of_week),
        rec.time_of_day,
        rec.activity,
        _fmt_float(accel[0]) if rec.accel else "",
        _fmt_float(accel[1]) if rec.accel else "",
        _fmt_float(accel[2]) if rec.accel else "",
        _fmt_float(gyro[0]) if rec.gyro else "",
        _fmt_float(gyro[1]) if rec.gyro else "",
        _fmt_float(gyro[2]) if rec.gyro else "",
        rec.foreground_app,
        rec.foreground_category,
        rec.notif_app,
        rec.notif_category,
        rec.response_behavior,
        str(rec.attention),
        "|".join(rec.codes),
        rec.motivation_text or "",
    ]


def write_records_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow(_record_row(rec))


def write_records_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            accel = rec.accel or (None, None, None)
            gyro = rec.gyro or (None, None, None)
            obj = {
                "user_id": rec.user_id,
                "round": rec.round,
                "received_at": rec.received_at,
                "clicked_at": rec.clicked_at,
                "weekday": rec.weekday,
                "day_of_week": rec.day_of_week,
                "time_of_day": rec.time_of_day,
                "activity": rec.activity,
                "accel_x": accel[0],
                "accel_y": accel[1],
                "accel_z": accel[2],
                "gyro_x": gyro[0],
                "gyro_y": gyro[1],
                "gyro_z": gyro[2],
                "foreground_app": rec.foreground_app,
                "foreground_category": rec.foreground_category,
                "notif_app": rec.notif_app,
                "notif_category": rec.notif_category,
                "response_behavior": rec.response_behavior,
                "attention": rec.attention,
                "codes": "|".join(rec.codes),
                "motivation_text": rec.motivation_text,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_profiles_csv(profiles, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        for p in profiles:
            writer.writerow([
                p.user_id,
                p.gender,
                str(p.age),
                p.occupation,
                p.education,
                p.phone_brand,
                "|".join(str(r) for r in p.rounds),
            ])


def write_dataset(ds: Dataset, records_path, profiles_path=None, taxonomy_path=None,
                  fmt: str | None = None) -> None:
    if fmt is None:
        fmt = "jsonl" if str(records_path).endswith((".jsonl", ".ndjson")) else "csv"
    if fmt == "csv":
        write_records_csv(ds.records, records_path)
    elif fmt == "jsonl":
        write_records_jsonl(ds.records, records_path)
    else:
        raise DatasetError(f"unknown records format {fmt!r}")
    if profiles_path is not None:
        write_profiles_csv(ds.profiles, profiles_path)
    if taxonomy_path is not None:
        ds.taxonomy.save(taxonomy_path)


def validate_dataset(ds: Dataset, check_time_fields: bool = True) -> ValidationReport:
    """Re-check an in-memory dataset and summarize it.

    Field-level validity is guaranteed by construction; this checks the
    cross-record and cross-table rules and tallies what a human reviewer
    wants to eyeball (per-level counts are reported as observed, never
    adjusted to match an expected total).
    """
    errors: list[str] = []
    warnings: list[str] = []
    seen: dict = {}
    known = ds.taxonomy.code_to_factor()
    counts: dict[int, int] = {}
    per_user: dict[str, int] = {}
    for i, rec in enumerate(ds.records):
        key = (rec.user_id, rec.clicked_at, rec.notif_app)
        if key in seen:
            errors.append(
                f"record {i}: duplicate (user_id, clicked_at, notif_app)={key!r}, "
                f"first seen at record {seen[key]}"
            )
        else:
            seen[key] = i
        for c in rec.codes:
            if c not in known:
                errors.append(f"record {i}: codes: unknown code id {c!r}")
        if check_time_fields:
            derived = derive_time_fields(rec.clicked_at, ds.tz)
            if (rec.time_of_day, rec.day_of_week, rec.weekday) != (
                derived.time_of_day,
                derived.day_of_week,
                derived.weekday,
            ):
                errors.append(
                    f"record {i}: clock fields disagree with clicked_at in zone {ds.tz}"
                )
        counts[rec.attention] = counts.get(rec.attention, 0) + 1
        per_user[rec.user_id] = per_user.get(rec.user_id, 0) + 1
    if ds.profiles:
        by_id = {p.user_id for p in ds.profiles}
        for u in sorted(per_user):
            if u not in by_id:
                errors.append(f"user {u!r} has records but no profile")
    else:
        warnings.append("no profiles attached")
    n_cat, n_fac, n_code = ds.taxonomy.counts
    if (n_cat, n_fac, n_code) != (4, 16, 46):
        warnings.append(
            f"taxonomy has {n_cat} categories, {n_fac} factors, {n_code} codes "
            "(reference codebook has 4, 16, 46)"
        )
    return ValidationReport(
        ok=not errors,
        errors=tuple(errors),
        warnings=tuple(warnings),
        n_records=len(ds.records),
        n_users=len(per_user),
        attention_counts=counts,
        records_per_user=per_user,
    )
