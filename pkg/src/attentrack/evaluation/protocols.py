"""Evaluation protocols around user-held-out generalization.

Cold-start (leave-one-user-out) is the headline protocol: each fold
trains on every other user's records and tests on the held-out user.
Personalization, incremental curves, ablations over feature schemes,
and demographic group models reuse the same fold machinery.

Determinism: the model seed of a cold fold is derived from (run seed,
held-out user) only. Any protocol that trains the same cold model, such
as the zero-fraction point of the incremental curve or the "general"
arm of personalization and group comparisons, derives the same seed and
therefore reproduces it bit for bit. Fold order, thread count, and
fraction order never touch the seeds, so parallel runs match serial
runs exactly.

Chronology: personalization and incremental splits sort each user's
records by click time and never let training data postdate test data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..dataset import Dataset
from ..features import build_matrix, labeler, scheme
from ..seeding import derive_seed
from ..trees import EnsembleModel, ForestParams, GbmParams, fit_forest, fit_gbm
from .metrics import MetricSet, aggregate_metrics, compute_metrics, random_baseline

DEFAULT_FRACTIONS = (0.0, 0.125, 0.25, 0.5, 0.75, 1.0)


class EvalError(ValueError):
    pass


def model_kind(params) -> str:
    if isinstance(params, ForestParams):
        return "rf"
    if isinstance(params, GbmParams):
        return "gb"
    raise EvalError(f"unknown model params {type(params).__name__}")


def fit_model(X, y, params, class_names=None) -> EnsembleModel:
    if isinstance(params, ForestParams):
        return fit_forest(X, y, params, class_names)
    if isinstance(params, GbmParams):
        return fit_gbm(X, y, params, class_names)
    raise EvalError(f"unknown model params {type(params).__name__}")


def scatter_scores(proba: np.ndarray, class_ids, k: int) -> np.ndarray:
    """Expand probabilities over the fitted classes to the task's k columns."""
    out = np.zeros((proba.shape[0], k), dtype=np.float64)
    out[:, np.asarray(class_ids, dtype=np.int64)] = proba
    return out


def _map_units(fn, units, n_jobs: int) -> list:
    if n_jobs <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, units))


@dataclass(frozen=True)
class _Encoded:
    X: np.ndarray
    y: np.ndarray
    uids: np.ndarray
    clicked: np.ndarray
    users: tuple[str, ...]
    k: int
    classes: tuple[str, ...]


def _encode(ds: Dataset, scheme_name: str, labeler_name: str) -> _Encoded:
    lab = labeler(labeler_name)
    enc = scheme(scheme_name, ds.taxonomy)
    fm = build_matrix(ds, enc, lab)
    uids = np.array(fm.user_ids)
    clicked = np.array([r.clicked_at for r in ds.records], dtype=np.int64)
    return _Encoded(
        X=fm.rows,
        y=fm.labels,
        uids=uids,
        clicked=clicked,
        users=tuple(sorted(set(fm.user_ids))),
        k=lab.n_classes,
        classes=lab.classes,
    )


def _fit_eval(enc: _Encoded, train: np.ndarray, test: np.ndarray, params, fold_seed: int,
              context: str) -> MetricSet:
    y_train = enc.y[train]
    if np.unique(y_train).size < 2:
        raise EvalError(f"{context}: training split has a single class")
    model = fit_model(enc.X[train], y_train, replace(params, seed=fold_seed), enc.classes)
    X_test = enc.X[test]
    scores = scatter_scores(model.predict_proba(X_test), model.class_ids, enc.k)
    y_pred = model.predict(X_test)
    return compute_metrics(enc.y[test], y_pred, scores, enc.k)


@dataclass(frozen=True)
class FoldResult:
    user: str
    n_train: int
    n_test: int
    model: MetricSet
    baseline: MetricSet | None = None


@dataclass(frozen=True)
class LouoReport:
    protocol: str
    scheme_name: str
    labeler_name: str
    model_kind: str
    seed: int
    classes: tuple[str, ...]
    folds: tuple[FoldResult, ...]

    def summary(self) -> dict:
        return aggregate_metrics([f.model for f in self.folds])

    def baseline_summary(self) -> dict | None:
        sets = [f.baseline for f in self.folds if f.baseline is not None]
        return aggregate_metrics(sets) if sets else None


def run_louo(ds: Dataset, params, scheme_name: str = "FULL",
             labeler_name: str = "ATTENTRACK_I", seed: int = 42, n_jobs: int = 1,
             with_baseline: bool = True) -> LouoReport:
    """Leave-one-user-out cold start."""
    enc = _encode(ds, scheme_name, labeler_name)
    if len(enc.users) < 2:
        raise EvalError("cold-start evaluation needs at least two users")

    def one(user: str) -> FoldResult:
        test = enc.uids == user
        train = ~test
        mset = _fit_eval(enc, train, test, params, derive_seed(seed, "fold", user),
                         f"held-out user {user}")
        base = None
        if with_baseline:
            bp, bs = random_baseline(enc.y[test], derive_seed(seed, "baseline", user), enc.k)
            base = compute_metrics(enc.y[test], bp, bs, enc.k)
        return FoldResult(user, int(train.sum()), int(test.sum()), mset, base)

    folds = _map_units(one, enc.users, n_jobs)
    return LouoReport(
        protocol="louo",
        scheme_name=scheme_name,
        labeler_name=labeler_name,
        model_kind=model_kind(params),
        seed=seed,
        classes=enc.classes,
        folds=tuple(folds),
    )


def _chronological(enc: _Encoded, user: str) -> np.ndarray:
    """Row indices of a user's records ordered by click time."""
    idx = np.where(enc.uids == user)[0]
    order = np.argsort(enc.clicked[idx], kind="stable")
    return idx[order]


@dataclass(frozen=True)
class PersonalRow:
    user: str
    n_train: int
    n_test: int
    personal: MetricSet | None
    general: MetricSet


@dataclass(frozen=True)
class PersonalizationReport:
    scheme_name: str
    labeler_name: str
    model_kind: str
    seed: int
    train_frac: float
    rows: tuple[PersonalRow, ...]
    skipped: tuple[tuple[str, str], ...]

    def summary(self) -> dict:
        personal = aggregate_metrics([r.personal for r in self.rows if r.personal is not None])
        general = aggregate_metrics([r.general for r in self.rows])
        return {"personal": personal, "general": general}


def run_personalization(ds: Dataset, params, scheme_name: str = "FULL",
                        labeler_name: str = "ATTENTRACK_I", seed: int = 42,
                        train_frac: float = 0.7, min_records: int = 10,
                        n_jobs: int = 1) -> PersonalizationReport:
    """Per-user chronological split: own early data vs everyone else's.

    The personal arm trains on the user's first ``train_frac`` share,
    the general arm on all other users; both test on the user's
    remaining records. Users with too few records, or whose early share
    has a single class, are reported rather than silently dropped (the
    general arm still runs in the single-class case).
    """
    if not 0.0 < train_frac < 1.0:
        raise EvalError("train_frac must be in (0, 1)")
    enc = _encode(ds, scheme_name, labeler_name)
    if len(enc.users) < 2:
        raise EvalError("personalization needs at least two users")

    skipped: list[tuple[str, str]] = []
    eligible: list[tuple[str, np.ndarray, np.ndarray]] = []
    for user in enc.users:
        ordered = _chronological(enc, user)
        if ordered.size < min_records:
            skipped.append((user, f"fewer than {min_records} records"))
            continue
        n_train = int(np.floor(train_frac * ordered.size))
        if n_train == 0 or n_train == ordered.size:
            skipped.append((user, "split leaves an empty side"))
            continue
        eligible.append((user, ordered[:n_train], ordered[n_train:]))

    def one(item) -> PersonalRow:
        user, own_train, own_test = item
        test = np.zeros(enc.uids.size, dtype=bool)
        test[own_test] = True
        general_train = enc.uids != user
        general = _fit_eval(enc, general_train, test, params, derive_seed(seed, "fold", user),
                            f"general model for user {user}")
        personal = None
        if np.unique(enc.y[own_train]).size >= 2:
            train = np.zeros(enc.uids.size, dtype=bool)
            train[own_train] = True
            personal = _fit_eval(enc, train, test, params, derive_seed(seed, "personal", user),
                                 f"personal model for user {user}")
        return PersonalRow(user, own_train.size, own_test.size, personal, general)

    rows = _map_units(one, eligible, n_jobs)
    for row in rows:
        if row.personal is None:
            skipped.append((row.user, "single-class personal training split"))
    return PersonalizationReport(
        scheme_name=scheme_name,
        labeler_name=labeler_name,
        model_kind=model_kind(params),
        seed=seed,
        train_frac=train_frac,
        rows=tuple(rows),
        skipped=tuple(sorted(skipped)),
    )


@dataclass(frozen=True)
class IncrementalRow:
    user: str
    n_test: int
    pool_size: int
    by_fraction: tuple[MetricSet, ...]


@dataclass(frozen=True)
class IncrementalReport:
    scheme_name: str
    labeler_name: str
    model_kind: str
    seed: int
    fractions: tuple[float, ...]
    rows: tuple[IncrementalRow, ...]
    skipped: tuple[tuple[str, str], ...]

    def summary(self) -> dict[float, dict]:
        out = {}
        for i, f in enumerate(self.fractions):
            out[f] = aggregate_metrics([r.by_fraction[i] for r in self.rows])
        return out


def run_incremental(ds: Dataset, params, scheme_name: str = "FULL",
                    labeler_name: str = "ATTENTRACK_I", seed: int = 42,
                    fractions: tuple[float, ...] = DEFAULT_FRACTIONS,
                    test_frac: float = 0.2, min_records: int = 10,
                    n_jobs: int = 1) -> IncrementalReport:
    """Cold model warmed with growing slices of the user's own history.

    Each user's last ``test_frac`` share (chronologically) is the test
    set; the rest is the personal pool. For each fraction f the model
    trains on everyone else plus the first f of the pool. The model
    seed does not depend on f, so f=0 is the cold-start model of the
    same run seed, bit for bit.
    """
    if not fractions:
        raise EvalError("fractions must be non-empty")
    for f in fractions:
        if not 0.0 <= f <= 1.0:
            raise EvalError(f"fraction {f} outside [0, 1]")
    enc = _encode(ds, scheme_name, labeler_name)
    if len(enc.users) < 2:
        raise EvalError("incremental evaluation needs at least two users")

    skipped: list[tuple[str, str]] = []
    eligible: list[tuple[str, np.ndarray, np.ndarray]] = []
    for user in enc.users:
        ordered = _chronological(enc, user)
        if ordered.size < min_records:
            skipped.append((user, f"fewer than {min_records} records"))
            continue
        n_pool = int(np.floor((1.0 - test_frac) * ordered.size))
        if n_pool == 0 or n_pool == ordered.size:
            skipped.append((user, "split leaves an empty side"))
            continue
        eligible.append((user, ordered[:n_pool], ordered[n_pool:]))

    def one(item) -> IncrementalRow:
        user, pool, own_test = item
        test = np.zeros(enc.uids.size, dtype=bool)
        test[own_test] = True
        fold_seed = derive_seed(seed, "fold", user)
        sets = []
        for f in fractions:
            n_add = int(np.floor(f * pool.size))
            train = enc.uids != user
            if n_add:
                train = train.copy()
                train[pool[:n_add]] = True
            sets.append(_fit_eval(enc, train, test, params, fold_seed,
                                  f"incremental model for user {user} at fraction {f}"))
        return IncrementalRow(user, own_test.size, pool.size, tuple(sets))

    rows = _map_units(one, eligible, n_jobs)
    return IncrementalReport(
        scheme_name=scheme_name,
        labeler_name=labeler_name,
        model_kind=model_kind(params),
        seed=seed,
        fractions=tuple(fractions),
        rows=tuple(rows),
        skipped=tuple(sorted(skipped)),
    )


ABLATION_SCHEMES = ("CONTEXT_ONLY", "DISTRACTION_ONLY", "FULL")


@dataclass(frozen=True)
class AblationReport:
    labeler_name: str
    model_kind: str
    seed: int
    scheme_names: tuple[str, ...]
    reports: tuple[LouoReport, ...]

    def summary(self) -> dict[str, dict]:
        return {r.scheme_name: r.summary() for r in self.reports}


def run_ablation(ds: Dataset, params, labeler_name: str = "ATTENTRACK_I", seed: int = 42,
                 scheme_names: tuple[str, ...] = ABLATION_SCHEMES,
                 n_jobs: int = 1) -> AblationReport:
    """Cold-start comparison across feature schemes at a shared seed."""
    reports = tuple(
        run_louo(ds, params, s, labeler_name, seed, n_jobs, with_baseline=False)
        for s in scheme_names
    )
    return AblationReport(
        labeler_name=labeler_name,
        model_kind=model_kind(params),
        seed=seed,
        scheme_names=tuple(scheme_names),
        reports=reports,
    )


@dataclass(frozen=True)
class GroupRow:
    user: str
    n_test: int
    group: MetricSet | None
    general: MetricSet
    note: str = ""


@dataclass(frozen=True)
class GroupReport:
    group_name: str
    scheme_name: str
    labeler_name: str
    model_kind: str
    seed: int
    group_users: tuple[str, ...]
    rows: tuple[GroupRow, ...]

    def summary(self) -> dict:
        group_sets = [r.group for r in self.rows if r.group is not None]
        return {
            "group": aggregate_metrics(group_sets),
            "general": aggregate_metrics([r.general for r in self.rows]),
        }


def run_group_model(ds: Dataset, predicate, group_name: str, params,
                    scheme_name: str = "FULL", labeler_name: str = "ATTENTRACK_I",
                    seed: int = 42, n_jobs: int = 1) -> GroupReport:
    """Within-group cold start vs the all-users cold start.

    ``predicate`` selects group members from their profiles. Every
    group member is held out once; the group arm trains on the rest of
    the group, the general arm on all other users.
    """
    if not ds.profiles:
        raise EvalError("group models need user profiles")
    enc = _encode(ds, scheme_name, labeler_name)
    by_id = {p.user_id: p for p in ds.profiles}
    missing = [u for u in enc.users if u not in by_id]
    if missing:
        raise EvalError(f"users without profiles: {', '.join(missing)}")
    group_users = tuple(u for u in enc.users if predicate(by_id[u]))
    if len(group_users) < 2:
        raise EvalError(f"group {group_name!r} needs at least two users with records")
    in_group = np.isin(enc.uids, np.array(group_users))

    def one(user: str) -> GroupRow:
        test = enc.uids == user
        general = _fit_eval(enc, ~test, test, params, derive_seed(seed, "fold", user),
                            f"general model for user {user}")
        group_train = in_group & ~test
        note = ""
        grp = None
        if np.unique(enc.y[group_train]).size >= 2:
            grp = _fit_eval(enc, group_train, test, params,
                            derive_seed(seed, "group", group_name, user),
                            f"group model for user {user}")
        else:
            note = "single-class group training split"
        return GroupRow(user, int(test.sum()), grp, general, note)

    rows = _map_units(one, group_users, n_jobs)
    return GroupReport(
        group_name=group_name,
        scheme_name=scheme_name,
        labeler_name=labeler_name,
        model_kind=model_kind(params),
        seed=seed,
        group_users=group_users,
        rows=tuple(rows),
    )
