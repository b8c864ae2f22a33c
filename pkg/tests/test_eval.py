"""Evaluation protocols: fold structure, determinism, and reports."""

from __future__ import annotations

import numpy as np
import pytest

from attentrack.evaluation import (
    ABLATION_SCHEMES,
    EvalError,
    compute_metrics,
    render_report,
    run_ablation,
    run_group_model,
    run_incremental,
    run_louo,
    run_personalization,
    write_report,
)
from attentrack.features import build_matrix, labeler, scheme
from attentrack.seeding import derive_seed
from attentrack.trees import ForestParams, GbmParams, fit_forest

SMALL_RF = ForestParams(n_estimators=3, max_depth=5, seed=42)
SMALL_GB = GbmParams(n_estimators=3, max_depth=2, seed=42)


class TestLouo:
    def test_fold_structure(self, synth_small):
        rep = run_louo(synth_small, SMALL_RF, seed=42)
        users = synth_small.users()
        assert tuple(f.user for f in rep.folds) == users
        n = len(synth_small)
        for fold in rep.folds:
            assert fold.n_test == len(synth_small.records_of(fold.user))
            assert fold.n_train == n - fold.n_test
            assert fold.baseline is not None
        assert rep.model_kind == "rf"
        assert rep.protocol == "louo"

    def test_summary_aggregates_over_users(self, synth_small):
        rep = run_louo(synth_small, SMALL_RF, seed=42)
        mean, sd, count = rep.summary()["accuracy"]
        assert count == len(rep.folds)
        assert 0.0 <= mean <= 1.0
        base = rep.baseline_summary()
        assert base is not None
        assert 0.3 <= base["auc"][0] <= 0.7

    def test_parallel_equals_serial(self, synth_small):
        serial = run_louo(synth_small, SMALL_RF, seed=42, n_jobs=1)
        parallel = run_louo(synth_small, SMALL_RF, seed=42, n_jobs=3)
        assert serial == parallel

    def test_seed_changes_results(self, synth_small):
        a = run_louo(synth_small, SMALL_RF, seed=42, with_baseline=False)
        b = run_louo(synth_small, SMALL_RF, seed=43, with_baseline=False)
        assert a != b

    def test_gbm_kind(self, synth_small):
        rep = run_louo(synth_small, SMALL_GB, seed=42, with_baseline=False)
        assert rep.model_kind == "gb"
        assert len(rep.folds) == len(synth_small.users())

    def test_single_user_rejected(self, synth_small):
        from attentrack.dataset import Dataset
        u = synth_small.users()[0]
        only = Dataset(records=synth_small.records_of(u),
                       profiles=tuple(p for p in synth_small.profiles if p.user_id == u))
        with pytest.raises(EvalError, match="two users"):
            run_louo(only, SMALL_RF)


class TestPersonalization:
    def test_rows_and_split_sizes(self, synth_small):
        rep = run_personalization(synth_small, SMALL_RF, seed=42, train_frac=0.7)
        assert rep.rows
        for row in rep.rows:
            total = len(synth_small.records_of(row.user))
            assert row.n_train == int(np.floor(0.7 * total))
            assert row.n_test == total - row.n_train

    def test_chronological_split(self, synth_small):
        # train rows must all precede test rows in click time
        rep = run_personalization(synth_small, SMALL_RF, seed=42, train_frac=0.7)
        for row in rep.rows:
            recs = sorted(synth_small.records_of(row.user), key=lambda r: r.clicked_at)
            train_max = recs[row.n_train - 1].clicked_at
            test_min = recs[row.n_train].clicked_at
            assert train_max <= test_min

    def test_min_records_skips(self, synth_small):
        rep = run_personalization(synth_small, SMALL_RF, seed=42, min_records=10_000)
        assert not rep.rows
        assert len(rep.skipped) == len(synth_small.users())

    def test_bad_train_frac(self, synth_small):
        with pytest.raises(EvalError):
            run_personalization(synth_small, SMALL_RF, train_frac=1.0)

    def test_summary_has_both_arms(self, synth_small):
        rep = run_personalization(synth_small, SMALL_RF, seed=42)
        s = rep.summary()
        assert set(s) == {"personal", "general"}


class TestIncremental:
    FRACTIONS = (0.0, 0.5, 1.0)

    def test_fraction_zero_reproduces_cold_start_model(self, synth_small):
        """The f=0 row must equal a cold-start fit at the same fold seed."""
        rep = run_incremental(synth_small, SMALL_RF, seed=42,
                              fractions=self.FRACTIONS)
        fm = build_matrix(synth_small, scheme("FULL"), labeler("ATTENTRACK_I"))
        uids = np.asarray(fm.user_ids)
        clicked = np.array([r.clicked_at for r in synth_small.records])
        for row in rep.rows:
            mask = uids == row.user
            idx = np.where(mask)[0]
            ordered = idx[np.argsort(clicked[idx], kind="stable")]
            n_pool = int(np.floor(0.8 * ordered.size))
            test_idx = ordered[n_pool:]
            train = ~mask
            params = ForestParams(n_estimators=3, max_depth=5,
                                  seed=derive_seed(42, "fold", row.user))
            model = fit_forest(fm.rows[train], fm.labels[train], params)
            scores = model.predict_proba(fm.rows[test_idx])
            expected = compute_metrics(fm.labels[test_idx],
                                       model.predict(fm.rows[test_idx]),
                                       scores, fm.n_classes)
            assert row.by_fraction[0] == expected

    def test_monotone_pool_sizes(self, synth_small):
        rep = run_incremental(synth_small, SMALL_RF, seed=42, fractions=self.FRACTIONS)
        for row in rep.rows:
            total = len(synth_small.records_of(row.user))
            assert row.pool_size == int(np.floor(0.8 * total))
            assert row.n_test == total - row.pool_size
            assert len(row.by_fraction) == len(self.FRACTIONS)

    def test_parallel_equals_serial(self, synth_small):
        a = run_incremental(synth_small, SMALL_RF, seed=42, fractions=self.FRACTIONS,
                            n_jobs=1)
        b = run_incremental(synth_small, SMALL_RF, seed=42, fractions=self.FRACTIONS,
                            n_jobs=2)
        assert a == b

    def test_summary_keyed_by_fraction(self, synth_small):
        rep = run_incremental(synth_small, SMALL_RF, seed=42, fractions=self.FRACTIONS)
        assert set(rep.summary()) == set(self.FRACTIONS)

    def test_bad_fraction_rejected(self, synth_small):
        with pytest.raises(EvalError):
            run_incremental(synth_small, SMALL_RF, fractions=(0.0, 1.5))
        with pytest.raises(EvalError):
            run_incremental(synth_small, SMALL_RF, fractions=())


class TestAblation:
    def test_default_schemes(self, synth_small):
        rep = run_ablation(synth_small, SMALL_RF, seed=42)
        assert rep.scheme_names == ABLATION_SCHEMES
        assert tuple(r.scheme_name for r in rep.reports) == ABLATION_SCHEMES
        s = rep.summary()
        assert set(s) == set(ABLATION_SCHEMES)

    def test_full_matches_plain_louo(self, synth_small):
        rep = run_ablation(synth_small, SMALL_RF, seed=42)
        solo = run_louo(synth_small, SMALL_RF, "FULL", seed=42, with_baseline=False)
        full = next(r for r in rep.reports if r.scheme_name == "FULL")
        assert full == solo


class TestGroupModel:
    def _predicate(self, synth_small):
        from collections import Counter
        genders = Counter(p.gender for p in synth_small.profiles)
        majority = genders.most_common(1)[0][0]
        return (lambda p: p.gender == majority), majority

    def test_group_vs_general(self, synth_small):
        pred, label = self._predicate(synth_small)
        rep = run_group_model(synth_small, pred, f"gender={label}", SMALL_RF, seed=42)
        assert len(rep.group_users) >= 2
        for row in rep.rows:
            assert row.general.n == row.n_test
            if row.group is None:
                assert row.note
        s = rep.summary()
        assert set(s) == {"group", "general"}

    def test_general_arm_matches_louo_fold(self, synth_small):
        """Shared fold seeds make the general arm the LOUO fold, exactly."""
        pred, label = self._predicate(synth_small)
        rep = run_group_model(synth_small, pred, f"gender={label}", SMALL_RF, seed=42)
        louo = run_louo(synth_small, SMALL_RF, seed=42, with_baseline=False)
        by_user = {f.user: f.model for f in louo.folds}
        for row in rep.rows:
            assert row.general == by_user[row.user]

    def test_no_profiles_rejected(self, synth_small):
        from attentrack.dataset import Dataset
        bare = Dataset(records=synth_small.records, profiles=())
        with pytest.raises(EvalError, match="profiles"):
            run_group_model(bare, lambda p: True, "all", SMALL_RF)

    def test_tiny_group_rejected(self, synth_small):
        with pytest.raises(EvalError, match="at least two"):
            run_group_model(synth_small, lambda p: False, "nobody", SMALL_RF)


class TestReports:
    def test_louo_render_deterministic(self, synth_small):
        rep = run_louo(synth_small, SMALL_RF, seed=42)
        a = render_report(rep)
        b = render_report(run_louo(synth_small, SMALL_RF, seed=42, n_jobs=2))
        assert a == b
        assert set(a) == {"louo_report.csv", "louo_report.md"}
        csv_text = a["louo_report.csv"]
        assert csv_text.count("\n") == len(rep.folds) + 1
        assert "Baseline" in a["louo_report.md"]
        assert "Random forest" in a["louo_report.md"]

    def test_every_protocol_renders(self, synth_small, tmp_path):
        pred = lambda p: p.occupation == "studying"
        reports = [
            run_louo(synth_small, SMALL_RF, seed=42),
            run_personalization(synth_small, SMALL_RF, seed=42),
            run_incremental(synth_small, SMALL_RF, seed=42, fractions=(0.0, 1.0)),
            run_ablation(synth_small, SMALL_RF, seed=42),
        ]
        from collections import Counter
        occ = Counter(p.occupation for p in synth_small.profiles)
        if occ["studying"] >= 2:
            reports.append(run_group_model(synth_small, pred, "students", SMALL_RF, seed=42))
        for rep in reports:
            files = render_report(rep)
            assert len(files) == 2
            for name, text in files.items():
                assert text.endswith("\n")
                assert name.endswith((".csv", ".md"))
            written = write_report(rep, tmp_path)
            for path in written:
                assert (tmp_path / path).exists() or np.any([str(path).endswith(n) for n in files])
