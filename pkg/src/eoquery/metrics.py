"""Per-sample scoring: ten deterministic metrics, the judged date-consistency metric,
exact match, and the date-failure category."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

from .codec import extract_json_substring, parse_answer
from .gateway import GatewayError, JudgeVerdict, Verdict
from .model import KNOWN_KEYS, REQUIRED_KEYS, EventType, ExtractedAnswer, QueryRecord
from .temporal import TemporalError, ambiguous_starts, parse_temporal, resolve
from .textsim import DEFAULT_CUTOFF, SynonymTable, equivalent, mentioned_in, normalize

METRIC_NAMES = {
    1: "valid_json",
    2: "expected_error",
    3: "valid_keys",
    4: "keys_required_present",
    5: "valid_event_type",
    6: "event_type_equivalent",
    7: "area_equivalent",
    8: "consistent_event_type",
    9: "consistent_area",
    10: "date_equivalent",
    11: "consistent_date",
}

UNPARSEABLE = "unparseable"

JudgeFn = Callable[[str, str], JudgeVerdict]


class FailureCategory(str, Enum):
    INSTRUCTION_VIOLATION = "instruction_violation"
    MISINTERPRETATION = "misinterpretation"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class MetricResult:
    """``passed`` is None when the outcome is indeterminate (metric 11 only)."""

    metric_id: int
    passed: bool | None
    detail: str
    judge_rationale: str | None = None

    @property
    def name(self) -> str:
        return METRIC_NAMES[self.metric_id]

    def to_json(self) -> dict[str, Any]:
        out = {"id": self.metric_id, "name": self.name, "pass": self.passed, "detail": self.detail}
        if self.judge_rationale is not None:
            out["judge_rationale"] = self.judge_rationale
        return out


@dataclass(frozen=True)
class MetricReport:
    record_id: int
    results: tuple[MetricResult, ...]
    exact_match: bool
    failure_category: FailureCategory | None = None

    def __post_init__(self) -> None:
        if [r.metric_id for r in self.results] != list(range(1, 12)):
            raise ValueError("a report holds metrics 1-11 in order")
        if self.failure_category is not None and self.result(10).passed:
            raise ValueError("failure category is only set when date equivalence fails")

    def result(self, metric_id: int) -> MetricResult:
        return self.results[metric_id - 1]

    def to_json(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "metrics": [r.to_json() for r in self.results],
            "exact_match": self.exact_match,
            "failure_category": self.failure_category.value if self.failure_category else None,
        }


def _ok(metric_id: int, detail: str = "ok") -> MetricResult:
    return MetricResult(metric_id, True, detail)


def _fail(metric_id: int, detail: str) -> MetricResult:
    return MetricResult(metric_id, False, detail)


# -- metrics 1-9 --------------------------------------------------------------

def m1_valid_json(raw: str) -> MetricResult:
    if extract_json_substring(raw) is None:
        return _fail(1, "no substring parses as a JSON object")
    return _ok(1)


def m2_expected_error(record: QueryRecord, ans: ExtractedAnswer) -> MetricResult:
    if record.golden.expected_error:
        return _ok(2, "error reported as expected") if ans.error else _fail(2, "expected an error message, none given")
    if ans.error:
        return _fail(2, f"unexpected error message: {ans.error!r}")
    return _ok(2)


def m3_valid_keys(ans: ExtractedAnswer) -> MetricResult:
    if ans.unknown_keys:
        return _fail(3, f"keys outside {sorted(KNOWN_KEYS)}: {sorted(ans.unknown_keys)}")
    return _ok(3)


def m4_required_keys(ans: ExtractedAnswer) -> MetricResult:
    missing = [k for k in REQUIRED_KEYS if not ans.has(k)]
    if missing:
        return _fail(4, f"missing {', '.join(missing)}")
    return _ok(4)


def canonical_event(value: str) -> EventType | None:
    norm = normalize(value)
    for event in EventType:
        if normalize(event.value) == norm:
            return event
    return None


def m5_valid_event_type(ans: ExtractedAnswer) -> MetricResult:
    if ans.event_type is None:
        return _fail(5, "event_type absent")
    if canonical_event(ans.event_type) is None:
        return _fail(5, f"unsupported event type {ans.event_type!r}")
    return _ok(5)


def _field_equivalent(metric_id: int, generated: str | None, golden: str | None, cutoff: float) -> MetricResult:
    if golden is None:
        if generated is None:
            return _ok(metric_id, "absent in both answer and golden")
        return _fail(metric_id, f"golden has no value, answer gave {generated!r}")
    if generated is None:
        return _fail(metric_id, "absent")
    if generated == golden:
        return _ok(metric_id, "exact match")
    if equivalent(generated, golden, cutoff):
        return _ok(metric_id, f"{generated!r} ~ {golden!r}")
    return _fail(metric_id, f"{generated!r} is not equivalent to {golden!r} at cutoff {cutoff}")


def m6_event_equivalent(record: QueryRecord, ans: ExtractedAnswer, cutoff: float = DEFAULT_CUTOFF) -> MetricResult:
    golden = record.golden.event_type.value if record.golden.event_type else None
    return _field_equivalent(6, ans.event_type, golden, cutoff)


def m7_area_equivalent(record: QueryRecord, ans: ExtractedAnswer, cutoff: float = DEFAULT_CUTOFF) -> MetricResult:
    return _field_equivalent(7, ans.area, record.golden.area, cutoff)


def m8_event_consistent(
    record: QueryRecord,
    ans: ExtractedAnswer,
    synonyms: SynonymTable | None = None,
    cutoff: float = DEFAULT_CUTOFF,
) -> MetricResult:
    if ans.event_type is None:
        return _fail(8, "event_type absent")
    synonyms = synonyms or SynonymTable.default()
    if mentioned_in(ans.event_type, record.query, synonyms, cutoff):
        return _ok(8)
    return _fail(8, f"event type {ans.event_type!r} is not mentioned in the query")


def m9_area_consistent(record: QueryRecord, ans: ExtractedAnswer, cutoff: float = DEFAULT_CUTOFF) -> MetricResult:
    if ans.area is None:
        return _fail(9, "area absent")
    if mentioned_in(ans.area, record.query, None, cutoff):
        return _ok(9)
    return _fail(9, f"area {ans.area!r} is not mentioned in the query")


# -- metric 10 ----------------------------------------------------------------

def accepted_starts(record: QueryRecord) -> frozenset[dt.date]:
    """Golden first date plus the resolver's alternate readings of the query's time reference."""
    golden = record.golden.date
    if golden is None:
        return frozenset()
    accepted = {golden.first}
    expr = parse_temporal(record.query)
    if expr is not None and record.anchor is not None:
        try:
            accepted |= resolve(expr, record.anchor).alternates
        except TemporalError:
            pass
    return frozenset(accepted)


def _expected_range_end(record: QueryRecord) -> dt.date | None:
    golden = record.golden.date
    if golden is not None and golden.kind == "range":
        return golden.last
    expr = parse_temporal(record.query)
    if expr is None or record.anchor is None:
        return None
    try:
        return resolve(expr, record.anchor).end
    except TemporalError:
        return None


def m10_date_equivalent(record: QueryRecord, ans: ExtractedAnswer, *, check_range_end: bool = False) -> MetricResult:
    """Generated first date must be an accepted start; at most first and last may be given.

    With ``check_range_end`` the last date of a two-date answer must also equal
    the golden (or resolved) window end, when one is known.
    """
    if record.golden.date is None:
        if ans.date is None and not ans.has("date"):
            return _ok(10, "no date expected and none given")
        return _fail(10, "golden has no date but the answer gave one")
    if ans.date is None:
        problems = [msg for name, msg in ans.field_errors if name == "date"]
        return _fail(10, f"malformed date: {problems[0]}" if problems else "date absent")
    dates = ans.date.dates
    if len(dates) >= 3:
        return _fail(10, f"enumerated {len(dates)} dates instead of the first (and optional last) date")
    if record.anchor is not None:
        future = [d for d in dates if d > record.anchor]
        if future:
            return _fail(10, f"{future[0].isoformat()} is after today ({record.anchor.isoformat()})")
    accepted = accepted_starts(record)
    if ans.date.first not in accepted:
        want = ", ".join(sorted(d.isoformat() for d in accepted))
        return _fail(10, f"first date {ans.date.first.isoformat()} not in accepted set {{{want}}}")
    if check_range_end and ans.date.kind == "range":
        end = _expected_range_end(record)
        if end is not None and ans.date.last != end:
            return _fail(10, f"range end {ans.date.last.isoformat()} != expected {end.isoformat()}")
    return _ok(10, f"first date {ans.date.first.isoformat()} accepted")


# -- metric 11 ----------------------------------------------------------------

def m11_date_consistent(record: QueryRecord, answer_json: str, judge: JudgeFn | None) -> MetricResult:
    if judge is None:
        return MetricResult(11, None, "judge disabled")
    try:
        verdict = judge(record.query, answer_json)
    except GatewayError as exc:
        return MetricResult(11, None, f"judge call failed: {exc}")
    if verdict.outcome is Verdict.CONSISTENT:
        return MetricResult(11, True, "judge: consistent", verdict.rationale)
    if verdict.outcome is Verdict.INCONSISTENT:
        return MetricResult(11, False, "judge: inconsistent", verdict.rationale)
    return MetricResult(11, None, "judge verdict not parseable as consistent/inconsistent", verdict.rationale)


# -- whole-answer checks -------------------------------------------------------

def exact_match(record: QueryRecord, ans: ExtractedAnswer | None) -> bool:
    if ans is None or ans.unknown_keys or ans.field_errors:
        return False
    golden = record.golden
    golden_event = golden.event_type.value if golden.event_type else None
    return (
        ans.area == golden.area
        and ans.event_type == golden_event
        and ans.date == golden.date
        and (ans.error is not None) == golden.expected_error
    )


def classify_date_failure(record: QueryRecord, ans: ExtractedAnswer | None) -> FailureCategory:
    """Bucket a date-equivalence failure.

    Instruction violations: no usable date, 3+ dates, a future date, or a
    two-date range whose start is wrong (a range was offered instead of the
    preferred single first date and even its start misses). Ambiguous: the
    first date is a recognised alternative reading (astronomical season start,
    either weekend day, Sunday/Monday week start). Anything else is a
    misinterpretation.
    """
    if ans is None or ans.date is None:
        return FailureCategory.INSTRUCTION_VIOLATION
    dates = ans.date.dates
    if len(dates) >= 3:
        return FailureCategory.INSTRUCTION_VIOLATION
    if record.anchor is not None and any(d > record.anchor for d in dates):
        return FailureCategory.INSTRUCTION_VIOLATION
    expr = parse_temporal(record.query)
    if expr is not None and record.anchor is not None and ans.date.first in ambiguous_starts(expr, record.anchor):
        return FailureCategory.AMBIGUOUS
    if ans.date.kind == "range" and ans.date.first not in accepted_starts(record):
        return FailureCategory.INSTRUCTION_VIOLATION
    return FailureCategory.MISINTERPRETATION


def evaluate_sample(
    record: QueryRecord,
    raw_output: str,
    judge: JudgeFn | None = None,
    *,
    cutoff: float = DEFAULT_CUTOFF,
    synonyms: SynonymTable | None = None,
    check_range_end: bool = False,
) -> MetricReport:
    """Score one raw model output against ``record``.

    When no JSON object can be found every later metric fails with detail
    "unparseable" and the judge is not consulted.
    """
    r1 = m1_valid_json(raw_output)
    json_text = extract_json_substring(raw_output)
    if json_text is None:
        rest = [_fail(i, UNPARSEABLE) for i in range(2, 12)]
        return MetricReport(record.id, (r1, *rest), False, FailureCategory.INSTRUCTION_VIOLATION)

    ans = parse_answer(json_text)
    synonyms = synonyms or SynonymTable.default()
    results = (
        r1,
        m2_expected_error(record, ans),
        m3_valid_keys(ans),
        m4_required_keys(ans),
        m5_valid_event_type(ans),
        m6_event_equivalent(record, ans, cutoff),
        m7_area_equivalent(record, ans, cutoff),
        m8_event_consistent(record, ans, synonyms, cutoff),
        m9_area_consistent(record, ans, cutoff),
        m10_date_equivalent(record, ans, check_range_end=check_range_end),
        m11_date_consistent(record, json_text, judge),
    )
    category = None if results[9].passed else classify_date_failure(record, ans)
    return MetricReport(record.id, results, exact_match(record, ans), category)


def golden_output(record: QueryRecord) -> str:
    """The golden answer rendered as a model would emit it."""
    return json.dumps(record.golden.to_json(), ensure_ascii=False)
