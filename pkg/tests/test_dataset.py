"""Record validation, file round-trips, parse errors, and user filtering."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attentrack.dataset import (
    DEFAULT_TAXONOMY,
    Dataset,
    DatasetError,
    SchemaError,
    coarsen_behavior,
    derive_time_fields,
    filter_users,
    load_taxonomy,
    parse_dataset,
    time_of_day_for_hour,
    validate_dataset,
    write_dataset,
)
from attentrack.dataset.model import (
    ACTIVITY_VALUES,
    COARSE_BEHAVIOR_VALUES,
    RESPONSE_BEHAVIOR_VALUES,
)

from conftest import make_dataset, make_profile, make_record


class TestRecordValidation:
    def test_minimal_record_is_valid(self):
        r = make_record()
        assert r.attention == 3
        assert r.response_time_s == 30

    def test_attention_out_of_range(self):
        with pytest.raises(SchemaError, match="attention"):
            make_record(attention=6)
        with pytest.raises(SchemaError, match="attention"):
            make_record(attention=0)

    def test_clicked_before_received(self):
        with pytest.raises(SchemaError, match="clicked_at"):
            make_record(received_at=100, clicked_at=99)

    def test_unknown_enum_token_lists_allowed(self):
        with pytest.raises(SchemaError, match="sitting"):
            make_record(activity="flying")

    def test_home_screen_allowed_only_in_foreground(self):
        r = make_record(foreground_app="launcher", foreground_category="home_screen")
        assert r.foreground_category == "home_screen"
        with pytest.raises(SchemaError, match="notif_category"):
            make_record(notif_category="home_screen")

    def test_sensor_vectors_optional_and_checked(self):
        r = make_record(accel=(0.0, 0.0, 9.8))
        assert r.accel == (0.0, 0.0, 9.8)
        assert r.gyro is None
        with pytest.raises(SchemaError, match="accel"):
            make_record(accel=(1.0, 2.0))
        with pytest.raises(SchemaError, match="finite"):
            make_record(gyro=(0.0, float("nan"), 0.0))

    def test_duplicate_codes_rejected(self):
        with pytest.raises(SchemaError, match="duplicate"):
            make_record(codes=("working", "working"))

    def test_coarsen_behavior(self):
        assert coarsen_behavior("ignore") == "no_response"
        assert coarsen_behavior("didnt_notice") == "no_response"
        assert coarsen_behavior("click_to_view") == "click_to_view"
        with pytest.raises(SchemaError):
            coarsen_behavior("shrug")
        for b in RESPONSE_BEHAVIOR_VALUES:
            assert coarsen_behavior(b) in COARSE_BEHAVIOR_VALUES

    def test_profile_bounds(self):
        with pytest.raises(SchemaError, match="age"):
            make_profile(age=7)
        with pytest.raises(SchemaError, match="rounds"):
            make_profile(rounds=(3,))


class TestTimeFields:
    @pytest.mark.parametrize(
        "hour,expected",
        [(0, "night"), (5, "night"), (6, "morning"), (11, "morning"),
         (12, "afternoon"), (17, "afternoon"), (18, "evening"), (23, "evening")],
    )
    def test_bucket_boundaries(self, hour, expected):
        assert time_of_day_for_hour(hour) == expected

    def test_derive_is_zone_dependent(self):
        # 2023-11-14 22:13:20 UTC is evening in UTC but morning in Tokyo.
        ts = 1_700_000_000
        utc = derive_time_fields(ts, "UTC")
        tokyo = derive_time_fields(ts, "Asia/Tokyo")
        assert utc.time_of_day == "evening"
        assert tokyo.time_of_day == "morning"
        assert utc.day_of_week == 1 and tokyo.day_of_week == 2

    def test_weekday_consistent_with_day_of_week(self):
        for d in range(7):
            tf = derive_time_fields(1_700_000_000 + d * 86_400, "UTC")
            assert tf.weekday == (tf.day_of_week < 5)


class TestRoundTrips:
    def _dataset(self):
        recs = []
        for i, activity in enumerate(ACTIVITY_VALUES):
            recs.append(make_record(
                user_id="u01",
                received_at=1_700_000_000 + i * 600,
                activity=activity,
                attention=(i % 5) + 1,
                accel=(0.1 * i, -0.2, 9.8) if i % 2 == 0 else None,
                codes=("working", "busy") if i % 3 == 0 else (),
                motivation_text="checking, messages" if i == 0 else None,
            ))
        recs.append(make_record(user_id="u02", received_at=1_700_050_000,
                                response_behavior="didnt_notice",
                                clicked_at=1_700_050_000 + 120))
        return make_dataset(recs)

    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_write_parse_identity(self, tmp_path, fmt):
        ds = self._dataset()
        rec_path = tmp_path / f"records.{fmt}"
        prof_path = tmp_path / "profiles.csv"
        write_dataset(ds, rec_path, profiles_path=prof_path, fmt=fmt)
        back = parse_dataset(rec_path, profiles_path=prof_path, fmt=fmt)
        assert back.records == ds.records
        assert back.profiles == ds.profiles

    def test_taxonomy_round_trip(self, tmp_path):
        p = tmp_path / "tax.json"
        DEFAULT_TAXONOMY.save(p)
        assert load_taxonomy(p) == DEFAULT_TAXONOMY

    def test_default_taxonomy_shape(self):
        assert DEFAULT_TAXONOMY.counts == (4, 16, 46)
        for code in DEFAULT_TAXONOMY.code_ids():
            factor = DEFAULT_TAXONOMY.factor_of(code)
            assert factor in DEFAULT_TAXONOMY.factor_ids()


class TestParseErrors:
    HEADER = ("user_id,round,received_at,clicked_at,weekday,day_of_week,"
              "time_of_day,activity,accel_x,accel_y,accel_z,gyro_x,gyro_y,gyro_z,"
              "foreground_app,foreground_category,notif_app,notif_category,"
              "response_behavior,attention,codes,motivation_text")

    def _row(self, **over):
        tf = derive_time_fields(1_700_000_000)
        vals = dict(user_id="u01", round="1", received_at="1699999970",
                    clicked_at="1700000000", weekday=str(tf.weekday).lower(),
                    day_of_week=str(tf.day_of_week), time_of_day=tf.time_of_day,
                    activity="sitting", foreground_app="a", foreground_category="social",
                    notif_app="b", notif_category="communication",
                    response_behavior="click_to_view", attention="3",
                    accel_x="", accel_y="", accel_z="", gyro_x="", gyro_y="", gyro_z="",
                    codes="", motivation_text="")
        vals.update(over)
        return ",".join(vals[c] for c in self.HEADER.split(","))

    def _parse(self, tmp_path, *rows, **kw):
        p = tmp_path / "records.csv"
        p.write_text("\n".join([self.HEADER, *rows]) + "\n")
        return parse_dataset(p, **kw)

    def test_error_names_line_and_field(self, tmp_path):
        with pytest.raises(DatasetError, match=r"line 3.*attention"):
            self._parse(tmp_path, self._row(), self._row(attention="9"))

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "records.csv"
        p.write_text("user_id,attention\nu01,3\n")
        with pytest.raises(DatasetError, match="header"):
            parse_dataset(p)

    def test_duplicate_triple_names_both_lines(self, tmp_path):
        with pytest.raises(DatasetError, match=r"line 3.*line 2"):
            self._parse(tmp_path, self._row(), self._row())

    def test_unknown_code_id(self, tmp_path):
        with pytest.raises(DatasetError, match="codes"):
            self._parse(tmp_path, self._row(codes="no_such_code"))

    def test_clock_mismatch_names_field(self, tmp_path):
        with pytest.raises(DatasetError, match="time_of_day"):
            self._parse(tmp_path, self._row(time_of_day="morning"))
        # same row accepted when the consistency check is off
        ds = self._parse(tmp_path, self._row(time_of_day="morning"),
                         check_time_fields=False)
        assert ds.records[0].time_of_day == "morning"

    def test_clock_fields_honor_tz(self, tmp_path):
        # 22:13 UTC is 06:13 in Shanghai: morning, next calendar day.
        row = self._row(time_of_day="morning", day_of_week="2")
        ds = self._parse(tmp_path, row, tz="Asia/Shanghai")
        assert ds.records[0].time_of_day == "morning"

    def test_profiles_must_cover_users(self, tmp_path):
        rec = tmp_path / "records.csv"
        rec.write_text("\n".join([self.HEADER, self._row()]) + "\n")
        prof = tmp_path / "profiles.csv"
        prof.write_text("user_id,gender,age,occupation,education,phone_brand,rounds\n"
                        "u99,male,30,working,master,acme,1\n")
        with pytest.raises(DatasetError, match="u01"):
            parse_dataset(rec, profiles_path=prof)

    def test_field_count_mismatch(self, tmp_path):
        with pytest.raises(DatasetError, match="line 2"):
            self._parse(tmp_path, "u01,1,2,3")


class TestValidationReport:
    def test_valid_synth_dataset_passes(self, synth_small):
        report = validate_dataset(synth_small)
        assert report.ok
        assert report.n_records == len(synth_small)
        assert report.n_users == len(synth_small.users())
        assert sum(report.attention_counts.values()) == report.n_records
        assert "records" in report.format()

    def test_duplicate_triple_reported(self):
        r = make_record()
        ds = Dataset(records=(r, r), profiles=(make_profile("u01"),))
        report = validate_dataset(ds)
        assert not report.ok
        assert any("duplicate" in e for e in report.errors)


class TestFilterUsers:
    def _dataset(self):
        recs = []
        # u_keep: 90 varied records; u_low: 10; u_const: 90 with one label
        for i in range(90):
            recs.append(make_record(user_id="u_keep", received_at=BASE + i * 60,
                                    attention=(i % 5) + 1))
        for i in range(10):
            recs.append(make_record(user_id="u_low", received_at=BASE + i * 60))
        for i in range(90):
            recs.append(make_record(user_id="u_const", received_at=BASE + i * 60,
                                    attention=4))
        return make_dataset(recs)

    def test_both_rules_apply(self):
        res = filter_users(self._dataset(), min_records=80)
        assert res.removed_low_count == ("u_low",)
        assert res.removed_constant == ("u_const",)
        assert res.dataset.users() == ("u_keep",)
        assert {p.user_id for p in res.dataset.profiles} == {"u_keep"}

    def test_idempotent(self):
        once = filter_users(self._dataset(), min_records=80)
        twice = filter_users(once.dataset, min_records=80)
        assert twice.dataset.records == once.dataset.records
        assert twice.removed_low_count == ()
        assert twice.removed_constant == ()

    def test_constant_rule_optional(self):
        res = filter_users(self._dataset(), min_records=80,
                           drop_constant_attention=False)
        assert res.removed_constant == ()
        assert "u_const" in res.dataset.users()

    def test_share_threshold(self):
        recs = [make_record(user_id="u", received_at=BASE + i * 60,
                            attention=5 if i else 1)
                for i in range(100)]
        # 99% one label exceeds the default 95% share
        res = filter_users(make_dataset(recs), min_records=80)
        assert res.removed_constant == ("u",)
        res = filter_users(make_dataset(recs), min_records=80, constant_share=0.999)
        assert res.removed_constant == ()


BASE = 1_700_000_000


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2_000_000_000))
def test_time_of_day_partition_property(ts):
    tf = derive_time_fields(ts, "UTC")
    assert tf.time_of_day in ("morning", "afternoon", "evening", "night")
    assert 0 <= tf.day_of_week <= 6


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5))
def test_attention_accepted_exactly_in_range(a):
    assert make_record(attention=a).attention == a
