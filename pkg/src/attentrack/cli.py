"""Command-line interface.

Subcommands: ``validate`` (parse and check a dataset), ``stats`` (the
descriptive and inferential battery), ``train`` (fit one model),
``eval`` (hold-out protocols), ``synth`` (generate synthetic data).

Conventions: exit 0 on success, 1 when the data is invalid or an
analysis cannot run, 2 on usage errors. Every writing command drops a
``manifest.json`` next to its outputs recording the resolved options,
the SHA-256 of each input file, and the artifact schema versions, and
contains nothing volatile, so rerunning with the same inputs and seed
reproduces every output byte for byte. Inputs are never modified.

Options can come from a JSON file via ``--config``; explicit flags win
over the file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .dataset import (
    DatasetError,
    SchemaError,
    TaxonomyError,
    filter_users,
    parse_dataset,
    validate_dataset,
    write_dataset,
)
from .evaluation import (
    EvalError,
    MetricError,
    REPORT_SCHEMA,
    render_report,
    run_ablation,
    run_group_model,
    run_incremental,
    run_louo,
    run_personalization,
)
from .features import FeatureError, LABELER_NAMES, SCHEME_NAMES, build_matrix, labeler, scheme
from .seeding import derive_seed
from .stats import (
    LMM_SCHEMA,
    StatsError,
    chi_square,
    cohens_kappa,
    crosstab,
    describe_by_group,
    fit_lmm,
    response_time_table,
)
from .synth import SYNTH_SCHEMA, SynthConfig, SynthError, generate, load_config
from .trees import MODEL_SCHEMA, ForestParams, GbmParams, TreeError
from .evaluation.protocols import fit_model

MANIFEST_SCHEMA = "attentrack-manifest/1"

_DATA_ERRORS = (
    OSError,
    json.JSONDecodeError,
    DatasetError,
    SchemaError,
    TaxonomyError,
    FeatureError,
    TreeError,
    EvalError,
    MetricError,
    StatsError,
    SynthError,
)


class UsageError(ValueError):
    pass


def _sha256(path: Path) -> tuple[str, int]:
    h = hashlib.sha256()
    data = path.read_bytes()
    h.update(data)
    return h.hexdigest(), len(data)


def _write_manifest(outdir: Path, command: str, options: dict, inputs: list, outputs: list[str]) -> None:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "options": {k: v for k, v in sorted(options.items())},
        "inputs": {},
        "outputs": sorted(outputs),
        "versions": {
            "package": __version__,
            "model": MODEL_SCHEMA,
            "report": REPORT_SCHEMA,
            "lmm": LMM_SCHEMA,
            "synth": SYNTH_SCHEMA,
            "taxonomy": "code-taxonomy/1",
        },
    }
    for p in inputs:
        if p is None:
            continue
        p = Path(p)
        digest, size = _sha256(p)
        manifest["inputs"][p.name] = {"path": str(p), "sha256": digest, "bytes": size}
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (outdir / "manifest.json").write_text(text, encoding="utf-8")


def _load_cli_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError("config file must hold a JSON object")
    return obj


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Flag value if given, else config-file value, else built-in default."""
    cfg = _load_cli_config(getattr(args, "config", None))
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key, builtin in defaults.items():
        v = getattr(args, key, None)
        if v is None:
            v = cfg.get(key, builtin)
        out[key] = v
    return out


def _load_dataset(o: dict):
    return parse_dataset(
        o["data"],
        profiles_path=o.get("profiles"),
        taxonomy_path=o.get("taxonomy"),
        fmt=o.get("format"),
        tz=o["tz"],
        check_time_fields=o["check_clock"],
    )


def _filtered_dataset(o: dict, out=sys.stdout):
    ds = _load_dataset(o)
    result = filter_users(ds, min_records=o["min_records"],
                          drop_constant_attention=o["drop_constant"])
    for line in result.format().splitlines():
        print(line, file=out)
    if not result.dataset.records:
        raise EvalError("no records left after filtering")
    return result.dataset


_DATA_DEFAULTS = {
    "data": None,
    "profiles": None,
    "taxonomy": None,
    "format": None,
    "tz": "UTC",
    "check_clock": True,
}

_FILTER_DEFAULTS = {"min_records": 80, "drop_constant": True}

_MODEL_DEFAULTS = {
    "model": "rf",
    "seed": 42,
    "n_estimators": None,
    "max_depth": None,
    "learning_rate": None,
    "subsample": None,
    "max_features": None,
    "class_weight": None,
    "min_samples_split": None,
    "min_samples_leaf": None,
}


def _model_params(o: dict):
    kind = o["model"]
    common = {}
    for key in ("n_estimators", "min_samples_split", "min_samples_leaf", "max_features"):
        if o.get(key) is not None:
            common[key] = o[key]
    if kind == "rf":
        extra = {}
        if o.get("max_depth") is not None:
            extra["max_depth"] = None if o["max_depth"] <= 0 else o["max_depth"]
        if o.get("class_weight") is not None:
            extra["class_weight"] = o["class_weight"]
        try:
            return ForestParams(seed=o["seed"], **common, **extra)
        except TreeError as exc:
            raise UsageError(str(exc)) from None
    if kind == "gb":
        extra = {}
        if o.get("max_depth") is not None:
            if o["max_depth"] <= 0:
                raise UsageError("gradient boosting needs a positive max depth")
            extra["max_depth"] = o["max_depth"]
        if o.get("learning_rate") is not None:
            extra["learning_rate"] = o["learning_rate"]
        if o.get("subsample") is not None:
            extra["subsample"] = o["subsample"]
        try:
            return GbmParams(seed=o["seed"], **common, **extra)
        except TreeError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"unknown model {kind!r}, allowed: rf, gb")


def _check_names(o: dict) -> None:
    if o["scheme"] not in SCHEME_NAMES:
        raise UsageError(f"unknown scheme {o['scheme']!r}, allowed: {', '.join(SCHEME_NAMES)}")
    if o["labeler"] not in LABELER_NAMES:
        raise UsageError(f"unknown labeler {o['labeler']!r}, allowed: {', '.join(LABELER_NAMES)}")


def _require(o: dict, key: str) -> None:
    if o.get(key) in (None, ""):
        raise UsageError(f"--{key.replace('_', '-')} is required")


# ---------------------------------------------------------------- validate

def cmd_validate(args: argparse.Namespace) -> int:
    o = _resolve(args, {**_DATA_DEFAULTS, **_FILTER_DEFAULTS})
    _require(o, "data")
    try:
        ds = _load_dataset(o)
    except _DATA_ERRORS as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    report = validate_dataset(ds, check_time_fields=o["check_clock"])
    print(report.format())
    result = filter_users(ds, min_records=o["min_records"],
                          drop_constant_attention=o["drop_constant"])
    print("modeling exclusions that would apply:")
    for line in result.format().splitlines():
        print(f"  {line}")
    return 0 if report.ok else 1


# ------------------------------------------------------------------- stats

def _describe_csv(rows) -> str:
    import io as _io

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "total", "proportion"]
               + [f"pct_{i}" for i in range(1, 6)] + ["mean", "sd", "median"])
    for r in rows:
        w.writerow([r.label, r.total, f"{r.proportion:.6f}"]
                   + [f"{p:.6f}" for p in r.level_pcts]
                   + [f"{r.mean:.6f}", f"{r.sd:.6f}", f"{r.median:.6f}"])
    return buf.getvalue()


def _describe_md(rows, field: str) -> str:
    lines = [
        f"# Attention by {field}",
        "",
        "| Group | Total | % | 1 | 2 | 3 | 4 | 5 | Mean±SD | Median |",
        "|---|---|---|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        lines.append(
            f"| {r.label} | {r.total} | {100 * r.proportion:.2f}% | "
            + " | ".join(f"{p:.2f}%" for p in r.level_pcts)
            + f" | {r.mean:.2f}±{r.sd:.2f} | {r.median:.2f} |"
        )
    return "\n".join(lines) + "\n"


def _rtimes_csv(rows) -> str:
    import io as _io

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["attention", "n", "mean", "q1", "median", "q3"])
    for r in rows:
        w.writerow([r.attention, r.n, f"{r.mean:.6f}", f"{r.q1:.6f}",
                    f"{r.median:.6f}", f"{r.q3:.6f}"])
    return buf.getvalue()


def _rtimes_md(rows) -> str:
    lines = [
        "# Response time by attention level",
        "",
        "| Attention | N | Mean (s) | Q1 | Median | Q3 |",
        "|---|---|---|---|---|---|",
    ]
    for r in rows:
        lines.append(f"| {r.attention} | {r.n} | {r.mean:.2f} | {r.q1:.0f} | "
                     f"{r.median:.0f} | {r.q3:.0f} |")
    return "\n".join(lines) + "\n"


_CHI2_PAIRS = (
    ("activity", "attention"),
    ("time_of_day", "attention"),
    ("weekday", "attention"),
    ("response_behavior", "attention"),
)


def cmd_stats(args: argparse.Namespace) -> int:
    defaults = {**_DATA_DEFAULTS, "out": "stats_out", "kappa_file": None, "reml": False}
    o = _resolve(args, defaults)
    _require(o, "data")
    ds = _load_dataset(o)
    outdir = Path(o["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []

    chi_lines = ["# Independence tests", ""]
    chi_rows = [["row_field", "col_field", "chi2", "df", "p", "n"]]
    for row_field, col_field in _CHI2_PAIRS:
        res = chi_square(crosstab(ds, row_field, col_field))
        chi_lines.append(f"- {row_field} x {col_field}: {res.format()}")
        chi_rows.append([row_field, col_field, f"{res.chi2:.6f}", str(res.df),
                         f"{res.p:.6g}", str(res.n)])
    (outdir / "chi_square.md").write_text("\n".join(chi_lines) + "\n", encoding="utf-8")
    (outdir / "chi_square.csv").write_text(
        "\n".join(",".join(r) for r in chi_rows) + "\n", encoding="utf-8")
    outputs += ["chi_square.md", "chi_square.csv"]

    for field in ("activity", "time_of_day"):
        rows = describe_by_group(ds, field)
        (outdir / f"attention_by_{field}.csv").write_text(_describe_csv(rows), encoding="utf-8")
        (outdir / f"attention_by_{field}.md").write_text(_describe_md(rows, field), encoding="utf-8")
        outputs += [f"attention_by_{field}.csv", f"attention_by_{field}.md"]

    rows = response_time_table(ds)
    (outdir / "response_times.csv").write_text(_rtimes_csv(rows), encoding="utf-8")
    (outdir / "response_times.md").write_text(_rtimes_md(rows), encoding="utf-8")
    outputs += ["response_times.csv", "response_times.md"]

    fit = fit_lmm(ds, reml=o["reml"])
    fit.save(outdir / "lmm.json")
    (outdir / "lmm.md").write_text("# Response-time mixed model\n\n```\n"
                                   + fit.format() + "\n```\n", encoding="utf-8")
    outputs += ["lmm.json", "lmm.md"]
    print(fit.format())

    if o["kappa_file"]:
        a, b = [], []
        with open(o["kappa_file"], "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != ("coder_a", "coder_b"):
                raise UsageError("kappa file must have header coder_a,coder_b")
            for line in reader:
                if len(line) != 2:
                    raise UsageError("kappa file rows must have two labels")
                a.append(line[0])
                b.append(line[1])
        kappa = cohens_kappa(a, b)
        (outdir / "kappa.txt").write_text(f"cohens_kappa = {kappa:.6f}\n", encoding="utf-8")
        outputs.append("kappa.txt")
        print(f"cohens_kappa = {kappa:.6f}")

    _write_manifest(outdir, "stats", o,
                    [o["data"], o.get("profiles"), o.get("taxonomy"), o.get("kappa_file")],
                    outputs)
    print(f"wrote {len(outputs)} files to {outdir}")
    return 0


# ------------------------------------------------------------------- train

def cmd_train(args: argparse.Namespace) -> int:
    defaults = {**_DATA_DEFAULTS, **_FILTER_DEFAULTS, **_MODEL_DEFAULTS,
                "scheme": "FULL", "labeler": "ATTENTRACK_I", "out": "train_out"}
    o = _resolve(args, defaults)
    _require(o, "data")
    _check_names(o)
    params = _model_params(o)
    ds = _filtered_dataset(o)
    lab = labeler(o["labeler"])
    fm = build_matrix(ds, scheme(o["scheme"], ds.taxonomy), lab)
    model = fit_model(fm.rows, fm.labels, params, lab.classes)
    outdir = Path(o["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    model.save(outdir / "model.json")
    _write_manifest(outdir, "train", o,
                    [o["data"], o.get("profiles"), o.get("taxonomy")], ["model.json"])
    print(f"trained {o['model']} on {fm.rows.shape[0]} records, "
          f"{fm.rows.shape[1]} features; wrote {outdir / 'model.json'}")
    return 0


# -------------------------------------------------------------------- eval

def _parse_fractions(raw: str) -> tuple[float, ...]:
    try:
        fracs = tuple(float(tok) for tok in raw.split(",") if tok.strip() != "")
    except ValueError:
        raise UsageError(f"bad fractions {raw!r}") from None
    if not fracs:
        raise UsageError("fractions must be non-empty")
    return fracs


_GROUP_FIELDS = ("gender", "occupation", "education", "phone_brand")


def cmd_eval(args: argparse.Namespace) -> int:
    defaults = {
        **_DATA_DEFAULTS, **_FILTER_DEFAULTS, **_MODEL_DEFAULTS,
        "experiment": "louo", "scheme": "FULL", "labeler": "ATTENTRACK_I",
        "out": "eval_out", "n_jobs": 1, "baseline": True,
        "fractions": "0,0.125,0.25,0.5,0.75,1", "train_frac": 0.7, "test_frac": 0.2,
        "min_user_records": 10, "group_field": None, "group_value": None,
    }
    o = _resolve(args, defaults)
    _require(o, "data")
    _check_names(o)
    params = _model_params(o)
    ds = _filtered_dataset(o)
    seed = o["seed"]

    exp = o["experiment"]
    if exp == "louo":
        report = run_louo(ds, params, o["scheme"], o["labeler"], seed,
                          n_jobs=o["n_jobs"], with_baseline=o["baseline"])
    elif exp == "personalization":
        report = run_personalization(ds, params, o["scheme"], o["labeler"], seed,
                                     train_frac=o["train_frac"],
                                     min_records=o["min_user_records"], n_jobs=o["n_jobs"])
    elif exp == "incremental":
        report = run_incremental(ds, params, o["scheme"], o["labeler"], seed,
                                 fractions=_parse_fractions(o["fractions"]),
                                 test_frac=o["test_frac"],
                                 min_records=o["min_user_records"], n_jobs=o["n_jobs"])
    elif exp == "ablation":
        report = run_ablation(ds, params, o["labeler"], seed, n_jobs=o["n_jobs"])
    elif exp == "group":
        if not o["group_field"] or o["group_value"] is None:
            raise UsageError("group experiments need --group-field and --group-value")
        if o["group_field"] not in _GROUP_FIELDS:
            raise UsageError(
                f"unknown group field {o['group_field']!r}, allowed: {', '.join(_GROUP_FIELDS)}")
        field, value = o["group_field"], o["group_value"]
        report = run_group_model(
            ds, lambda p: getattr(p, field) == value, f"{field}={value}",
            params, o["scheme"], o["labeler"], seed, n_jobs=o["n_jobs"])
    else:
        raise UsageError(
            f"unknown experiment {exp!r}, allowed: louo, personalization, incremental, "
            "ablation, group")

    outdir = Path(o["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    files = render_report(report)
    for name, text in files.items():
        (outdir / name).write_text(text, encoding="utf-8")
    _write_manifest(outdir, "eval", o,
                    [o["data"], o.get("profiles"), o.get("taxonomy")], list(files))
    for name, text in files.items():
        if name.endswith(".md"):
            print(text, end="")
    print(f"wrote {', '.join(sorted(files))} to {outdir}")
    return 0


# ------------------------------------------------------------------- synth

def cmd_synth(args: argparse.Namespace) -> int:
    defaults = {
        "synth_config": None, "n_users": None, "records_lo": None, "records_hi": None,
        "seed": None, "format": "csv", "out": "synth_out",
    }
    o = _resolve(args, defaults)
    cfg = load_config(o["synth_config"]) if o["synth_config"] else SynthConfig()
    overrides = {}
    if o["n_users"] is not None:
        overrides["n_users"] = o["n_users"]
    if (o["records_lo"] is None) != (o["records_hi"] is None):
        raise UsageError("--records-lo and --records-hi go together")
    if o["records_lo"] is not None:
        overrides["records_per_user"] = (o["records_lo"], o["records_hi"])
    if o["seed"] is not None:
        overrides["seed"] = o["seed"]
    if overrides:
        from dataclasses import replace as _replace

        cfg = _replace(cfg, **overrides)
    if o["format"] not in ("csv", "jsonl"):
        raise UsageError(f"unknown format {o['format']!r}, allowed: csv, jsonl")

    ds = generate(cfg)
    outdir = Path(o["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    records_name = f"records.{o['format']}"
    write_dataset(ds, outdir / records_name, outdir / "profiles.csv",
                  outdir / "taxonomy.json", fmt=o["format"])
    cfg.save(outdir / "config.json")
    outputs = [records_name, "profiles.csv", "taxonomy.json", "config.json"]
    _write_manifest(outdir, "synth", {**o, "resolved_seed": cfg.seed},
                    [o["synth_config"]], outputs)
    print(f"generated {len(ds.records)} records for {len(ds.users())} users in {outdir}")
    return 0


# -------------------------------------------------------------------- main

def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="records file (csv or jsonl)")
    p.add_argument("--profiles", help="profiles csv")
    p.add_argument("--taxonomy", help="taxonomy json")
    p.add_argument("--format", choices=["csv", "jsonl"], help="records format (default: by extension)")
    p.add_argument("--tz", help="IANA zone the clock fields were recorded in (default UTC)")
    p.add_argument("--check-clock", action=argparse.BooleanOptionalAction, default=None,
                   help="verify clock-derived fields against clicked_at (default on)")


def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-records", type=int, help="drop users with fewer records (default 80)")
    p.add_argument("--drop-constant", action=argparse.BooleanOptionalAction, default=None,
                   help="drop users with near-constant attention (default on)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["rf", "gb"], help="classifier (default rf)")
    p.add_argument("--seed", type=int, help="run seed (default 42)")
    p.add_argument("--n-estimators", type=int)
    p.add_argument("--max-depth", type=int, help="tree depth cap; <=0 means unlimited (rf only)")
    p.add_argument("--learning-rate", type=float, help="gb only")
    p.add_argument("--subsample", type=float, help="gb only")
    p.add_argument("--max-features", choices=["sqrt", "all"])
    p.add_argument("--class-weight", choices=["balanced", "none"], help="rf only")
    p.add_argument("--min-samples-split", type=int)
    p.add_argument("--min-samples-leaf", type=int)


def _add_task_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", help="feature scheme (default FULL)")
    p.add_argument("--labeler", help="label definition (default ATTENTRACK_I)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attentrack",
        description="Attention-state prediction from notification response behavior.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a dataset")
    p.add_argument("--config", help="JSON file of option defaults")
    _add_data_flags(p)
    _add_filter_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="descriptive tables, tests, mixed model")
    p.add_argument("--config", help="JSON file of option defaults")
    _add_data_flags(p)
    p.add_argument("--out", help="output directory (default stats_out)")
    p.add_argument("--kappa-file", help="csv with columns coder_a,coder_b")
    p.add_argument("--reml", action=argparse.BooleanOptionalAction, default=None,
                   help="REML instead of ML for the mixed model")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="fit one model on the filtered dataset")
    p.add_argument("--config", help="JSON file of option defaults")
    _add_data_flags(p)
    _add_filter_flags(p)
    _add_task_flags(p)
    _add_model_flags(p)
    p.add_argument("--out", help="output directory (default train_out)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run a hold-out evaluation protocol")
    p.add_argument("--config", help="JSON file of option defaults")
    _add_data_flags(p)
    _add_filter_flags(p)
    _add_task_flags(p)
    _add_model_flags(p)
    p.add_argument("--experiment",
                   choices=["louo", "personalization", "incremental", "ablation", "group"],
                   help="protocol (default louo)")
    p.add_argument("--out", help="output directory (default eval_out)")
    p.add_argument("--n-jobs", type=int, help="parallel folds (default 1)")
    p.add_argument("--baseline", action=argparse.BooleanOptionalAction, default=None,
                   help="include the random baseline (louo, default on)")
    p.add_argument("--fractions", help="comma list for incremental (default 0,0.125,0.25,0.5,0.75,1)")
    p.add_argument("--train-frac", type=float, help="personalization train share (default 0.7)")
    p.add_argument("--test-frac", type=float, help="incremental test share (default 0.2)")
    p.add_argument("--min-user-records", type=int,
                   help="per-user floor for within-user splits (default 10)")
    p.add_argument("--group-field", help="profile field for group experiments")
    p.add_argument("--group-value", help="profile value for group experiments")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--synth-config", help="generator config json")
    p.add_argument("--n-users", type=int)
    p.add_argument("--records-lo", type=int)
    p.add_argument("--records-hi", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--out", help="output directory (default synth_out)")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
