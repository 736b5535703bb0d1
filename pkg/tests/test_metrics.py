import datetime as dt
import json

import pytest

from eoquery.codec import parse_answer
from eoquery.gateway import GatewayError, JudgeVerdict, Verdict, parse_verdict
from eoquery.metrics import (
    FailureCategory,
    MetricReport,
    MetricResult,
    classify_date_failure,
    evaluate_sample,
    exact_match,
    golden_output,
    m1_valid_json,
    m2_expected_error,
    m3_valid_keys,
    m4_required_keys,
    m5_valid_event_type,
    m6_event_equivalent,
    m7_area_equivalent,
    m8_event_consistent,
    m9_area_consistent,
    m10_date_equivalent,
    m11_date_consistent,
)
from eoquery.model import DateValue, EventType, GoldenAnswer, QueryRecord, extract_anchor


def record(rid, query, area, date, event, expected_error=False):
    golden = GoldenAnswer(area, DateValue.from_json(date) if date else None,
                          EventType(event) if event else None, expected_error)
    return QueryRecord(rid, query, golden, extract_anchor(query))


HOUSTON = record(60, "Provide the latest imagery of flooding in Houston, Texas, from this past Tuesday. "
                     "Today is June 4, 2024.", "Houston, Texas", "2024-05-28", "flood")
KANSAS = record(68, "Can you find crop types in Kansas as of the last 30 days? Today is June 4, 2024.",
                "Kansas", "2024-05-04", "crops")
PYRENEES = record(94, "Show the most recent burn scars in the Pyrenees from this week. Today is June 4, 2024.",
                  "Pyrenees", "2024-06-02", "burn_scars")
SEOUL = record(1, "July 14, 2023, flooding in Seoul", "Seoul", "2023-07-14", "flood")
TRACE_60 = '{\n  "area": "Houston, Texas",\n  "date": "2024-06-02",\n  "event_type": "flood",\n  "error": ""\n}'


def ans(obj):
    return parse_answer(json.dumps(obj))


def judge_says(text):
    return lambda query, answer_json: parse_verdict(text)


def test_m1():
    assert m1_valid_json(TRACE_60).passed
    assert not m1_valid_json("no braces").passed
    assert not m1_valid_json('{"area": }').passed


def test_m2():
    err = ans({"area": "Kansas", "error": "Event type not specified"})
    assert m2_expected_error(record(2, "q", "Kansas", None, None, expected_error=True), err).passed
    assert m2_expected_error(HOUSTON, ans({"area": "x"})).passed
    assert not m2_expected_error(HOUSTON, err).passed
    assert not m2_expected_error(record(2, "q", "Kansas", None, None, expected_error=True), ans({})).passed


def test_m3_m4():
    trace60 = parse_answer(TRACE_60)
    assert m3_valid_keys(trace60).passed
    assert not m3_valid_keys(ans({"location": "x"})).passed
    assert m3_valid_keys(ans({})).passed
    assert m4_required_keys(trace60).passed
    assert not m4_required_keys(ans({"area": "Kansas", "date": "2024-05-05", "error": "x"})).passed
    assert not m4_required_keys(ans({})).passed


@pytest.mark.parametrize("event,ok", [("flood", True), ("wildfire", False), ("burn scars", True), ("Burn_Scars", True)])
def test_m5(event, ok):
    assert m5_valid_event_type(ans({"event_type": event})).passed is ok


def test_m5_absent():
    assert not m5_valid_event_type(ans({})).passed


def test_m6_m7():
    assert m7_area_equivalent(HOUSTON, ans({"area": "Houston, Texas"})).passed
    assert m6_event_equivalent(HOUSTON, ans({"event_type": "flooding"})).passed
    assert not m6_event_equivalent(HOUSTON, ans({"event_type": "burn_scars"})).passed
    assert not m7_area_equivalent(HOUSTON, ans({})).passed
    assert not m7_area_equivalent(HOUSTON, ans({"area": "Dallas"})).passed


def test_m6_cutoff_is_a_parameter():
    assert not m6_event_equivalent(HOUSTON, ans({"event_type": "flooding"}), cutoff=0.8).passed


def test_m8_m9():
    assert not m8_event_consistent(KANSAS, ans({"event_type": "flood"})).passed
    assert m8_event_consistent(KANSAS, ans({"event_type": "crops"})).passed
    assert m9_area_consistent(SEOUL, ans({"area": "Seoul"})).passed
    assert not m9_area_consistent(SEOUL, ans({"area": "Busan"})).passed
    assert not m9_area_consistent(SEOUL, ans({})).passed


def test_m8_ignores_golden():
    other = QueryRecord(KANSAS.id, KANSAS.query, GoldenAnswer("Mars", DateValue.single(dt.date(2024, 1, 1)),
                                                             EventType.FLOOD), KANSAS.anchor)
    assert m8_event_consistent(other, ans({"event_type": "crops"})).passed


class TestDateEquivalent:
    def test_enumeration_fails_even_with_right_start(self):
        dates = [f"2024-05-{d}" for d in range(28, 32)] + ["2024-06-01", "2024-06-02", "2024-06-03"]
        assert not m10_date_equivalent(HOUSTON, ans({"date": dates})).passed

    def test_wrong_single(self):
        assert not m10_date_equivalent(HOUSTON, parse_answer(TRACE_60)).passed

    def test_exact(self):
        assert m10_date_equivalent(HOUSTON, ans({"date": "2024-05-28"})).passed

    def test_monday_alternate(self):
        assert m10_date_equivalent(PYRENEES, ans({"date": "2024-06-03"})).passed

    def test_range_with_accepted_start(self):
        assert m10_date_equivalent(HOUSTON, ans({"date": ["2024-05-28", "2024-05-29"]})).passed

    def test_range_end_check_is_optional(self):
        weekend = record(5, "Floods in Paris from last weekend. Today is June 4, 2024.", "Paris", "2024-06-01", "flood")
        answer = ans({"date": ["2024-06-01", "2024-06-03"]})
        assert m10_date_equivalent(weekend, answer).passed
        assert not m10_date_equivalent(weekend, answer, check_range_end=True).passed
        assert m10_date_equivalent(weekend, ans({"date": ["2024-06-01", "2024-06-02"]}), check_range_end=True).passed

    def test_future_date(self):
        r = record(6, "Floods in Lima on June 1, 2024. Today is June 4, 2024.", "Lima", "2024-06-01", "flood")
        assert not m10_date_equivalent(r, ans({"date": ["2024-06-01", "2024-06-05"]})).passed

    def test_absent_and_malformed(self):
        assert m10_date_equivalent(HOUSTON, ans({})).detail == "date absent"
        assert "malformed" in m10_date_equivalent(HOUSTON, ans({"date": "May 28"})).detail

    def test_last_n_days_either_count(self):
        assert m10_date_equivalent(KANSAS, ans({"date": "2024-05-04"})).passed
        assert m10_date_equivalent(KANSAS, ans({"date": "2024-05-05"})).passed
        assert not m10_date_equivalent(KANSAS, ans({"date": "2024-05-06"})).passed

    def test_no_temporal_expression_means_golden_only(self):
        assert m10_date_equivalent(SEOUL, ans({"date": "2023-07-14"})).passed
        assert not m10_date_equivalent(SEOUL, ans({"date": "2023-07-13"})).passed


class TestDateConsistent:
    def test_pass(self):
        r = m11_date_consistent(HOUSTON, "{}", judge_says("consistent — the date matches the past week window"))
        assert r.passed is True and r.judge_rationale

    def test_fail(self):
        reply = "inconsistent: the response also contains an error message stating that the event type is not specified"
        assert m11_date_consistent(KANSAS, "{}", judge_says(reply)).passed is False

    def test_hedge_is_indeterminate(self):
        assert m11_date_consistent(KANSAS, "{}", judge_says("somewhat consistent")).passed is None

    def test_transport_failure_is_indeterminate(self):
        def broken(query, answer_json):
            raise GatewayError("connection refused")
        r = m11_date_consistent(KANSAS, "{}", broken)
        assert r.passed is None and "connection refused" in r.detail

    def test_disabled(self):
        assert m11_date_consistent(KANSAS, "{}", None).passed is None


def test_exact_match():
    assert not exact_match(HOUSTON, parse_answer(TRACE_60))
    assert exact_match(HOUSTON, parse_answer(golden_output(HOUSTON)))
    assert not exact_match(HOUSTON, ans({**json.loads(golden_output(HOUSTON)), "extra": 1}))
    assert not exact_match(HOUSTON, None)


class TestClassifier:
    def test_enumeration(self):
        dates = [f"2024-03-{d:02d}" for d in range(1, 32)]
        spring = record(63, "Highlight recent flooding events in the UK from this past Spring. Today is June 4, 2024.",
                        "UK", "2024-03-01", "flood")
        assert classify_date_failure(spring, ans({"date": dates})) is FailureCategory.INSTRUCTION_VIOLATION

    def test_future(self):
        friday = record(80, "Display the latest crop types in Israel observed this Friday. Today is June 4, 2024.",
                        "Israel", "2024-05-31", "crops")
        assert classify_date_failure(friday, ans({"date": "2024-06-07"})) is FailureCategory.INSTRUCTION_VIOLATION

    def test_equinox(self):
        amazon = record(106, "Show burn scars in the Amazon from this Spring. Today is June 4, 2024.",
                        "Amazon", "2024-03-01", "burn_scars")
        assert classify_date_failure(amazon, ans({"date": ["2024-03-20"]})) is FailureCategory.AMBIGUOUS

    def test_misinterpretation(self):
        assert classify_date_failure(HOUSTON, parse_answer(TRACE_60)) is FailureCategory.MISINTERPRETATION

    def test_missing_date(self):
        assert classify_date_failure(HOUSTON, ans({"area": "x"})) is FailureCategory.INSTRUCTION_VIOLATION


class TestEvaluateSample:
    def test_trace_60(self):
        report = evaluate_sample(HOUSTON, TRACE_60, judge_says("Inconsistent. It is a Sunday."))
        assert [r.passed for r in report.results] == [True] * 9 + [False, False]
        assert report.failure_category is FailureCategory.MISINTERPRETATION
        assert not report.exact_match

    def test_garbage(self):
        report = evaluate_sample(HOUSTON, "garbage", judge_says("consistent"))
        assert not report.result(1).passed
        assert all(report.result(i).passed is False and report.result(i).detail == "unparseable" for i in range(2, 12))
        assert report.failure_category is FailureCategory.INSTRUCTION_VIOLATION

    def test_golden_echo(self):
        report = evaluate_sample(HOUSTON, golden_output(HOUSTON), judge_says("consistent."))
        assert all(r.passed for r in report.results)
        assert report.exact_match and report.failure_category is None

    def test_deterministic(self):
        assert evaluate_sample(KANSAS, TRACE_60) == evaluate_sample(KANSAS, TRACE_60)

    def test_report_json_shape(self):
        out = evaluate_sample(HOUSTON, TRACE_60).to_json()
        assert set(out) == {"record_id", "metrics", "exact_match", "failure_category"}
        assert [m["id"] for m in out["metrics"]] == list(range(1, 12))
        assert {"id", "name", "pass", "detail"} <= set(out["metrics"][0])

    def test_report_invariants(self):
        results = tuple(MetricResult(i, True, "ok") for i in range(1, 12))
        with pytest.raises(ValueError):
            MetricReport(1, results, True, FailureCategory.AMBIGUOUS)
        with pytest.raises(ValueError):
            MetricReport(1, results[:10], True)


def test_cutoff_invariance_on_golden_self_test(sample_records):
    for cutoff in (0.3, 0.7, 1.0):
        for r in sample_records:
            if r.golden.expected_error:
                continue
            report = evaluate_sample(r, golden_output(r), cutoff=cutoff)
            assert report.result(6).passed and report.result(7).passed


def test_verdict_type_sanity():
    assert JudgeVerdict(Verdict.CONSISTENT, "x").outcome is Verdict.CONSISTENT
