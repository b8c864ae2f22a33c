"""Render evaluation reports as CSV (one row per fold) and Markdown.

Output is deterministic: users come sorted, floats are fixed-precision,
and nothing (timestamps, hostnames, dict ordering) leaks in, so the
same run seed yields byte-identical files.

Markdown summary tables follow the usual results-table layout: one row
per model or condition, columns Accuracy / AUC / Precision / Recall /
F1 as "mean±sd" percentages. Precision, recall, and F1 are the macro
averages; the CSV carries every flavor.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .metrics import MetricSet
from .protocols import (
    AblationReport,
    GroupReport,
    IncrementalReport,
    LouoReport,
    PersonalizationReport,
)

REPORT_SCHEMA = "attentrack-report/1"

_CSV_METRICS = (
    "accuracy",
    "auc",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "precision_weighted",
    "recall_weighted",
    "f1_weighted",
    "precision_pos",
    "recall_pos",
    "f1_pos",
)

_SUMMARY_COLUMNS = ("accuracy", "auc", "precision_macro", "recall_macro", "f1_macro")


def _num(v: float | None) -> str:
    return "" if v is None else format(v, ".6f")


def _pct_pair(mean: float | None, sd: float | None) -> str:
    if mean is None:
        return "-"
    return f"{100.0 * mean:.2f}±{100.0 * sd:.2f}"


def _metric_cells(m: MetricSet | None) -> list[str]:
    if m is None:
        return [""] * len(_CSV_METRICS)
    return [_num(getattr(m, name)) for name in _CSV_METRICS]


def _summary_line(summary: dict, label: str) -> str:
    cells = [label]
    for name in _SUMMARY_COLUMNS:
        mean, sd, _ = summary.get(name, (None, None, 0))
        cells.append(_pct_pair(mean, sd))
    return "| " + " | ".join(cells) + " |"


_MD_HEADER = (
    "| Model | Accuracy | AUC | Precision | Recall | F1 |\n"
    "|---|---|---|---|---|---|"
)


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _model_label(kind: str) -> str:
    return {"rf": "Random forest", "gb": "Gradient boosting"}.get(kind, kind)


def louo_csv(r: LouoReport) -> str:
    header = ["protocol", "scheme", "labeler", "model", "seed", "user", "n_train", "n_test"]
    header += [f"model_{m}" for m in _CSV_METRICS]
    header += [f"baseline_{m}" for m in _CSV_METRICS]
    rows = []
    for f in r.folds:
        rows.append(
            [r.protocol, r.scheme_name, r.labeler_name, r.model_kind, str(r.seed),
             f.user, str(f.n_train), str(f.n_test)]
            + _metric_cells(f.model)
            + _metric_cells(f.baseline)
        )
    return _csv_text(header, rows)


def louo_markdown(r: LouoReport) -> str:
    lines = [
        "# Cold-start evaluation (leave-one-user-out)",
        "",
        f"scheme {r.scheme_name}, labeler {r.labeler_name}, seed {r.seed}, "
        f"{len(r.folds)} users, classes: {', '.join(r.classes)}",
        "",
        _MD_HEADER,
    ]
    base = r.baseline_summary()
    if base is not None:
        lines.append(_summary_line(base, "Baseline"))
    lines.append(_summary_line(r.summary(), _model_label(r.model_kind)))
    lines.append("")
    lines.append("Mean and population standard deviation over per-user folds, in percent.")
    return "\n".join(lines) + "\n"


def personalization_csv(r: PersonalizationReport) -> str:
    header = ["scheme", "labeler", "model", "seed", "user", "n_train", "n_test", "arm"]
    header += list(_CSV_METRICS)
    rows = []
    for row in r.rows:
        for arm, mset in (("personal", row.personal), ("general", row.general)):
            if mset is None:
                continue
            rows.append(
                [r.scheme_name, r.labeler_name, r.model_kind, str(r.seed),
                 row.user, str(row.n_train), str(row.n_test), arm]
                + _metric_cells(mset)
            )
    for user, reason in r.skipped:
        rows.append([r.scheme_name, r.labeler_name, r.model_kind, str(r.seed),
                     user, "", "", f"skipped: {reason}"] + [""] * len(_CSV_METRICS))
    return _csv_text(header, rows)


def personalization_markdown(r: PersonalizationReport) -> str:
    s = r.summary()
    lines = [
        "# Personalization (chronological within-user split)",
        "",
        f"scheme {r.scheme_name}, labeler {r.labeler_name}, model {_model_label(r.model_kind)}, "
        f"seed {r.seed}, train fraction {r.train_frac:g}, {len(r.rows)} users",
        "",
        _MD_HEADER.replace("Model", "Arm", 1),
        _summary_line(s["personal"], "Personal"),
        _summary_line(s["general"], "General"),
    ]
    if r.skipped:
        lines.append("")
        lines.append("Skipped users: " + "; ".join(f"{u} ({why})" for u, why in r.skipped))
    return "\n".join(lines) + "\n"


def incremental_csv(r: IncrementalReport) -> str:
    header = ["scheme", "labeler", "model", "seed", "user", "pool_size", "n_test", "fraction"]
    header += list(_CSV_METRICS)
    rows = []
    for row in r.rows:
        for frac, mset in zip(r.fractions, row.by_fraction):
            rows.append(
                [r.scheme_name, r.labeler_name, r.model_kind, str(r.seed),
                 row.user, str(row.pool_size), str(row.n_test), format(frac, "g")]
                + _metric_cells(mset)
            )
    for user, reason in r.skipped:
        rows.append([r.scheme_name, r.labeler_name, r.model_kind, str(r.seed),
                     user, "", "", f"skipped: {reason}"] + [""] * len(_CSV_METRICS))
    return _csv_text(header, rows)


def incremental_markdown(r: IncrementalReport) -> str:
    lines = [
        "# Incremental personalization curve",
        "",
        f"scheme {r.scheme_name}, labeler {r.labeler_name}, model {_model_label(r.model_kind)}, "
        f"seed {r.seed}, {len(r.rows)} users",
        "",
        "| Fraction of own history | Accuracy | AUC | Precision | Recall | F1 |",
        "|---|---|---|---|---|---|",
    ]
    summary = r.summary()
    for frac in r.fractions:
        lines.append(_summary_line(summary[frac], format(frac, "g")))
    if r.skipped:
        lines.append("")
        lines.append("Skipped users: " + "; ".join(f"{u} ({why})" for u, why in r.skipped))
    return "\n".join(lines) + "\n"


def ablation_csv(r: AblationReport) -> str:
    header = ["protocol", "scheme", "labeler", "model", "seed", "user", "n_train", "n_test"]
    header += [f"model_{m}" for m in _CSV_METRICS]
    rows = []
    for rep in r.reports:
        for f in rep.folds:
            rows.append(
                ["ablation", rep.scheme_name, rep.labeler_name, rep.model_kind, str(rep.seed),
                 f.user, str(f.n_train), str(f.n_test)]
                + _metric_cells(f.model)
            )
    return _csv_text(header, rows)


def ablation_markdown(r: AblationReport) -> str:
    lines = [
        "# Feature-scheme ablation (cold start)",
        "",
        f"labeler {r.labeler_name}, model {_model_label(r.model_kind)}, seed {r.seed}",
        "",
        _MD_HEADER.replace("Model", "Scheme", 1),
    ]
    for rep in r.reports:
        lines.append(_summary_line(rep.summary(), rep.scheme_name))
    return "\n".join(lines) + "\n"


def group_csv(r: GroupReport) -> str:
    header = ["group", "scheme", "labeler", "model", "seed", "user", "n_test", "arm"]
    header += list(_CSV_METRICS)
    rows = []
    for row in r.rows:
        for arm, mset in (("group", row.group), ("general", row.general)):
            if mset is None:
                continue
            rows.append(
                [r.group_name, r.scheme_name, r.labeler_name, r.model_kind, str(r.seed),
                 row.user, str(row.n_test), arm]
                + _metric_cells(mset)
            )
        if row.note:
            rows.append([r.group_name, r.scheme_name, r.labeler_name, r.model_kind,
                         str(r.seed), row.user, str(row.n_test), f"note: {row.note}"]
                        + [""] * len(_CSV_METRICS))
    return _csv_text(header, rows)


def group_markdown(r: GroupReport) -> str:
    s = r.summary()
    lines = [
        "# Group model vs general model (cold start)",
        "",
        f"group {r.group_name} ({len(r.group_users)} users), scheme {r.scheme_name}, "
        f"labeler {r.labeler_name}, model {_model_label(r.model_kind)}, seed {r.seed}",
        "",
        _MD_HEADER.replace("Model", "Arm", 1),
        _summary_line(s["group"], "Group"),
        _summary_line(s["general"], "General"),
    ]
    return "\n".join(lines) + "\n"


def render_report(report) -> dict[str, str]:
    """File name to file text for any protocol report."""
    if isinstance(report, LouoReport):
        return {"louo_report.csv": louo_csv(report), "louo_report.md": louo_markdown(report)}
    if isinstance(report, PersonalizationReport):
        return {
            "personalization_report.csv": personalization_csv(report),
            "personalization_report.md": personalization_markdown(report),
        }
    if isinstance(report, IncrementalReport):
        return {
            "incremental_report.csv": incremental_csv(report),
            "incremental_report.md": incremental_markdown(report),
        }
    if isinstance(report, AblationReport):
        return {
            "ablation_report.csv": ablation_csv(report),
            "ablation_report.md": ablation_markdown(report),
        }
    if isinstance(report, GroupReport):
        return {"group_report.csv": group_csv(report), "group_report.md": group_markdown(report)}
    raise TypeError(f"no renderer for {type(report).__name__}")


def write_report(report, outdir) -> list[str]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = []
    for name, text in render_report(report).items():
        (outdir / name).write_text(text, encoding="utf-8")
        names.append(name)
    return names
