"""Domain types shared by every stage: event types, date values, answers, records."""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)
_MONTH_LOOKUP = {name.lower(): i + 1 for i, name in enumerate(MONTH_NAMES)}
_MONTH_LOOKUP.update({name[:3].lower(): i + 1 for i, name in enumerate(MONTH_NAMES)})
_MONTH_LOOKUP["sept"] = 9

KNOWN_KEYS = frozenset({"area", "date", "event_type", "error"})
REQUIRED_KEYS = ("area", "date", "event_type")

_ISO_DATE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_ANCHOR_CLAUSE = re.compile(r"(?:^|\s)today is\s+(?P<body>[^.?!]*?)\s*[.?!]?\s*$", re.IGNORECASE)
_ANCHOR_BODY = re.compile(r"^(?P<month>[A-Za-z]+)\.?\s+(?P<day>\d{1,2}),?\s+(?P<year>\d{4})$")


class EventType(str, Enum):
    FLOOD = "flood"
    BURN_SCARS = "burn_scars"
    CROPS = "crops"


class DateFormatError(ValueError):
    """A date value does not follow the YYYY-MM-DD / list-of-dates contract."""


class AnchorError(ValueError):
    """A trailing "Today is ..." clause exists but its date cannot be read."""


def parse_iso_date(text: str) -> dt.date:
    if not isinstance(text, str):
        raise DateFormatError(f"expected a YYYY-MM-DD string, got {text!r}")
    m = _ISO_DATE.match(text)
    if not m:
        raise DateFormatError(f"not a YYYY-MM-DD date: {text!r}")
    try:
        return dt.date(int(m[1]), int(m[2]), int(m[3]))
    except ValueError as exc:
        raise DateFormatError(f"invalid calendar date {text!r}: {exc}") from None


def month_number(name: str) -> int | None:
    return _MONTH_LOOKUP.get(name.lower().rstrip("."))


@dataclass(frozen=True)
class DateValue:
    """One date, a [first, last] range, or an ascending list of dates.

    The kind is implied by length: 1 is single, 2 is a range, 3+ is a list.
    """

    dates: tuple[dt.date, ...]

    def __post_init__(self) -> None:
        if not self.dates:
            raise DateFormatError("date value is empty")
        if len(self.dates) == 2 and self.dates[0] > self.dates[1]:
            raise DateFormatError(f"range starts after it ends: {self.to_json()}")
        if len(self.dates) >= 3 and any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise DateFormatError("date list is not strictly ascending")

    @property
    def kind(self) -> str:
        return {1: "single", 2: "range"}.get(len(self.dates), "list")

    @property
    def first(self) -> dt.date:
        return self.dates[0]

    @property
    def last(self) -> dt.date:
        return self.dates[-1]

    @classmethod
    def single(cls, day: dt.date) -> DateValue:
        return cls((day,))

    @classmethod
    def from_json(cls, value: Any) -> DateValue:
        if isinstance(value, str):
            return cls((parse_iso_date(value),))
        if isinstance(value, list):
            return cls(tuple(parse_iso_date(v) for v in value))
        raise DateFormatError(f"date must be a string or an array of strings, got {value!r}")

    def to_json(self) -> str | list[str]:
        if len(self.dates) == 1:
            return self.dates[0].isoformat()
        return [d.isoformat() for d in self.dates]


@dataclass(frozen=True)
class ExtractedAnswer:
    """Fields read out of a model's JSON answer.

    ``field_errors`` holds (field, message) pairs for keys that were present but
    carried a value of the wrong shape; the field itself is then ``None``.
    """

    area: str | None = None
    date: DateValue | None = None
    event_type: str | None = None
    error: str | None = None
    unknown_keys: frozenset[str] = frozenset()
    field_errors: tuple[tuple[str, str], ...] = ()

    def has(self, key: str) -> bool:
        """True when ``key`` was supplied, even if its value was malformed."""
        if getattr(self, key) is not None:
            return True
        return any(name == key for name, _ in self.field_errors)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.area is not None:
            out["area"] = self.area
        if self.date is not None:
            out["date"] = self.date.to_json()
        if self.event_type is not None:
            out["event_type"] = self.event_type
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class GoldenAnswer:
    area: str | None
    date: DateValue | None
    event_type: EventType | None
    expected_error: bool = False
    error: str | None = None

    def __post_init__(self) -> None:
        if not self.expected_error:
            missing = [k for k in REQUIRED_KEYS if getattr(self, k) is None]
            if missing:
                raise ValueError(f"golden answer lacks {', '.join(missing)}")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.area is not None:
            out["area"] = self.area
        if self.date is not None:
            out["date"] = self.date.to_json()
        if self.event_type is not None:
            out["event_type"] = self.event_type.value
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class QueryRecord:
    id: int
    query: str
    golden: GoldenAnswer
    anchor: dt.date | None = field(default=None)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "query": self.query, "answer": self.golden.to_json()}
        if self.golden.expected_error:
            out["expected_error"] = True
        return out


def format_anchor(anchor: dt.date) -> str:
    return f"Today is {MONTH_NAMES[anchor.month - 1]} {anchor.day}, {anchor.year}."


def strip_anchor(query: str) -> str:
    """Drop a trailing "Today is ..." clause, if any."""
    m = _ANCHOR_CLAUSE.search(query)
    return query[: m.start()].rstrip() if m else query


def extract_anchor(query: str) -> dt.date | None:
    """Read the injected "today" from a trailing "Today is <Month D, YYYY>." clause."""
    m = _ANCHOR_CLAUSE.search(query)
    if m is None:
        return None
    body = m["body"].strip()
    parts = _ANCHOR_BODY.match(body)
    month = month_number(parts["month"]) if parts else None
    if parts is None or month is None:
        raise AnchorError(f"cannot read date in anchor clause {body!r}")
    try:
        return dt.date(int(parts["year"]), month, int(parts["day"]))
    except ValueError as exc:
        raise AnchorError(f"invalid anchor date {body!r}: {exc}") from None


def augment_with_anchor(query: str, anchor: dt.date) -> str:
    """Append the "Today is ..." suffix; an existing suffix is replaced, so this is idempotent."""
    if not query:
        raise ValueError("query must be non-empty")
    try:
        if extract_anchor(query) == anchor:
            return query
    except AnchorError:
        pass
    return f"{strip_anchor(query)} {format_anchor(anchor)}"
