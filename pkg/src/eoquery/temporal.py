"""Deterministic parsing and resolution of relative time references.

The resolver is the ground truth behind date equivalence: it maps a phrase such
as "this past Tuesday" plus the query's anchor date to the preferred first date
of the window and any other start dates that are equally defensible.
"""

from __future__ import annotations

import calendar
import datetime as dt
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Union

from .model import MONTH_NAMES, month_number, strip_anchor

MIN_YEAR = 1900
MAX_YEAR = 2200

WEEKDAYS = ("sunday", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday")
SUNDAY, MONDAY, SATURDAY = 0, 1, 6

# meteorological season -> first month
SEASON_START = {"spring": 3, "summer": 6, "autumn": 9, "winter": 12}
# astronomical starts, used only to recognise an ambiguous answer
SEASON_ASTRONOMICAL = {"spring": (3, 20), "summer": (6, 21), "autumn": (9, 22), "winter": (12, 21)}

NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6, "seven": 7,
    "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13,
    "fourteen": 14, "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19, "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50, "sixty": 60,
    "seventy": 70, "eighty": 80, "ninety": 90,
}


class TemporalError(ValueError):
    """Date arithmetic left the supported range, or a window landed in the future."""


class Category(str, Enum):
    EXPLICIT_DATE = "explicit_date"
    NAMED_WEEKDAY_PAST = "named_weekday_past"
    NAMED_WEEKDAY_THIS = "named_weekday_this"
    THIS_WEEK = "this_week"
    PAST_WEEK = "past_week"
    LAST_WEEKEND = "last_weekend"
    THIS_PAST_WEEKEND = "this_past_weekend"
    LAST_MONTH = "last_month"
    LAST_N_DAYS = "last_n_days"
    LAST_N_HOURS = "last_n_hours"
    PAST_N_MONTHS = "past_n_months"
    THIS_SEASON_NAMED = "this_season_named"
    LAST_SEASON = "last_season"
    THIS_YEAR = "this_year"
    PAST_YEAR = "past_year"
    YESTERDAY = "yesterday"
    SINCE_YEAR = "since_year"


Payload = Union[int, str, dt.date, None]


@dataclass(frozen=True)
class TemporalExpression:
    """A recognised time reference.

    ``value`` depends on the category: weekday index (0 = Sunday) for the
    weekday forms, a count for the ``last_n_*``/``past_n_*`` forms, a season
    name, an explicit date, or a year for ``since_year``.
    """

    category: Category
    value: Payload = None
    span: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        c = self.category
        if c in (Category.NAMED_WEEKDAY_PAST, Category.NAMED_WEEKDAY_THIS):
            if not (isinstance(self.value, int) and 0 <= self.value <= 6):
                raise ValueError(f"{c.value} needs a weekday index 0-6, got {self.value!r}")
        elif c in (Category.LAST_N_DAYS, Category.LAST_N_HOURS, Category.PAST_N_MONTHS):
            if not (isinstance(self.value, int) and self.value > 0):
                raise ValueError(f"{c.value} needs a positive count, got {self.value!r}")
        elif c is Category.THIS_SEASON_NAMED:
            if self.value not in SEASON_START:
                raise ValueError(f"unknown season {self.value!r}")
        elif c is Category.EXPLICIT_DATE:
            if not isinstance(self.value, dt.date):
                raise ValueError("explicit_date needs a date")
        elif c is Category.SINCE_YEAR:
            if not isinstance(self.value, int):
                raise ValueError("since_year needs a year")

    @property
    def is_relative(self) -> bool:
        return self.category is not Category.EXPLICIT_DATE


@dataclass(frozen=True)
class ResolvedWindow:
    start: dt.date
    end: dt.date | None = None
    alternates: frozenset[dt.date] = frozenset()

    def to_json(self) -> dict:
        return {
            "start": self.start.isoformat(),
            "end": self.end.isoformat() if self.end else None,
            "alternates": sorted(d.isoformat() for d in self.alternates),
        }


# -- calendar arithmetic ------------------------------------------------------

def _checked(d: dt.date) -> dt.date:
    if not MIN_YEAR <= d.year <= MAX_YEAR:
        raise TemporalError(f"{d.isoformat()} is outside {MIN_YEAR}-{MAX_YEAR}")
    return d


def weekday(d: dt.date) -> int:
    """Day of week with 0 = Sunday ... 6 = Saturday."""
    return d.isoweekday() % 7


def add_days(d: dt.date, n: int) -> dt.date:
    try:
        return _checked(d + dt.timedelta(days=n))
    except OverflowError:
        raise TemporalError(f"{d.isoformat()} + {n} days overflows") from None


def add_months(d: dt.date, n: int) -> dt.date:
    """Shift by calendar months, clamping the day to the target month's length."""
    index = d.year * 12 + (d.month - 1) + n
    year, month = divmod(index, 12)
    month += 1
    if not MIN_YEAR <= year <= MAX_YEAR:
        raise TemporalError(f"{d.isoformat()} + {n} months is outside {MIN_YEAR}-{MAX_YEAR}")
    return dt.date(year, month, min(d.day, calendar.monthrange(year, month)[1]))


def add_years(d: dt.date, n: int) -> dt.date:
    return add_months(d, 12 * n)


def month_end(d: dt.date) -> dt.date:
    return d.replace(day=calendar.monthrange(d.year, d.month)[1])


def most_recent_weekday(anchor: dt.date, day: int, *, strict: bool) -> dt.date:
    back = (weekday(anchor) - day) % 7
    if strict and back == 0:
        back = 7
    return add_days(anchor, -back)


def season_of(d: dt.date) -> str:
    for name, month in (("winter", 12), ("autumn", 9), ("summer", 6), ("spring", 3)):
        if d.month >= month:
            return name
    return "winter"


def season_start(season: str, anchor: dt.date) -> dt.date:
    """First day of the latest occurrence of ``season`` that began on or before ``anchor``."""
    start = dt.date(anchor.year, SEASON_START[season], 1)
    return start if start <= anchor else dt.date(anchor.year - 1, SEASON_START[season], 1)


# -- phrase grammar -----------------------------------------------------------

_MONTH_RE = "|".join(
    sorted({m.lower() for m in MONTH_NAMES} | {m[:3].lower() for m in MONTH_NAMES} | {"sept"}, key=len, reverse=True)
)
_WEEKDAY_RE = "|".join(WEEKDAYS)
_NUM_RE = r"\d+|" + "|".join(sorted(NUMBER_WORDS, key=len, reverse=True))
_SEASON_RE = "spring|summer|autumn|fall|winter"


def _count(text: str) -> int:
    return int(text) if text.isdigit() else NUMBER_WORDS[text.lower()]


def _explicit_mdy(m: re.Match) -> Payload:
    return dt.date(int(m["y"]), month_number(m["mon"]), int(m["d"]))


def _season(m: re.Match) -> str:
    name = m["season"].lower()
    return "autumn" if name == "fall" else name


_Rule = tuple[Category, "re.Pattern[str]", Callable[[re.Match], Payload]]

_RULES: list[_Rule] = [
    (Category.EXPLICIT_DATE,
     re.compile(rf"\b(?P<mon>{_MONTH_RE})\.?\s+(?P<d>\d{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<y>\d{{4}})\b", re.I),
     _explicit_mdy),
    (Category.EXPLICIT_DATE,
     re.compile(rf"\b(?P<d>\d{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?(?P<mon>{_MONTH_RE})\.?,?\s+(?P<y>\d{{4}})\b", re.I),
     _explicit_mdy),
    (Category.EXPLICIT_DATE,
     re.compile(r"\b(?P<y>\d{4})-(?P<m>\d{2})-(?P<d>\d{2})\b"),
     lambda m: dt.date(int(m["y"]), int(m["m"]), int(m["d"]))),
    (Category.THIS_PAST_WEEKEND, re.compile(r"\bthis\s+(?:past\s+)?weekend\b", re.I), lambda m: None),
    (Category.LAST_WEEKEND, re.compile(r"\b(?:last|past|previous)\s+weekend\b", re.I), lambda m: None),
    (Category.NAMED_WEEKDAY_PAST,
     re.compile(rf"\b(?:this\s+past|last|past|previous)\s+(?P<wd>{_WEEKDAY_RE})\b", re.I),
     lambda m: WEEKDAYS.index(m["wd"].lower())),
    (Category.NAMED_WEEKDAY_THIS,
     re.compile(rf"\bthis\s+(?P<wd>{_WEEKDAY_RE})\b", re.I),
     lambda m: WEEKDAYS.index(m["wd"].lower())),
    (Category.THIS_WEEK, re.compile(r"\bthis\s+week\b", re.I), lambda m: None),
    (Category.PAST_WEEK, re.compile(r"\b(?:past|last)\s+week\b", re.I), lambda m: None),
    (Category.LAST_MONTH, re.compile(r"\blast\s+month\b", re.I), lambda m: None),
    (Category.PAST_N_MONTHS, re.compile(r"\bpast\s+month\b", re.I), lambda m: 1),
    (Category.LAST_N_DAYS,
     re.compile(rf"\b(?:last|past)\s+(?P<n>{_NUM_RE})\s+days?\b", re.I),
     lambda m: _count(m["n"])),
    (Category.LAST_N_HOURS,
     re.compile(rf"\b(?:last|past)\s+(?P<n>{_NUM_RE})\s+hours?\b", re.I),
     lambda m: _count(m["n"])),
    (Category.PAST_N_MONTHS,
     re.compile(rf"\b(?:last|past)\s+(?P<n>{_NUM_RE})\s+months?\b", re.I),
     lambda m: _count(m["n"])),
    (Category.THIS_SEASON_NAMED,
     re.compile(rf"\bthis\s+(?:past\s+)?(?P<season>{_SEASON_RE})\b", re.I),
     _season),
    (Category.LAST_SEASON, re.compile(r"\b(?:last|past|previous)\s+season\b", re.I), lambda m: None),
    (Category.THIS_YEAR, re.compile(r"\bthis\s+year\b", re.I), lambda m: None),
    (Category.PAST_YEAR, re.compile(r"\bpast\s+year\b", re.I), lambda m: None),
    (Category.YESTERDAY, re.compile(r"\byesterday\b", re.I), lambda m: None),
    (Category.SINCE_YEAR, re.compile(r"\bsince\s+(?P<y>\d{4})\b", re.I), lambda m: int(m["y"])),
]


def parse_temporal(text: str) -> TemporalExpression | None:
    """Return the earliest recognised time reference in ``text``.

    A trailing "Today is ..." clause is ignored. When two phrases start at the
    same offset the longer one wins (so "this past weekend" beats "this past").
    """
    body = strip_anchor(text)
    best: tuple[int, int, int] | None = None
    found: TemporalExpression | None = None
    for order, (category, pattern, payload) in enumerate(_RULES):
        for m in pattern.finditer(body):
            try:
                expr = TemporalExpression(category, payload(m), (m.start(), m.end()))
            except (ValueError, KeyError, TypeError):
                continue  # e.g. "February 30, 2024" or "last 0 days"
            key = (m.start(), -(m.end() - m.start()), order)
            if best is None or key < best:
                best = key
                found = expr
            break
    return found


# -- resolution ---------------------------------------------------------------

def resolve(expr: TemporalExpression, anchor: dt.date) -> ResolvedWindow:
    """Map ``expr`` to a concrete window relative to ``anchor`` (the query's "today")."""
    _checked(anchor)
    c, v = expr.category, expr.value
    end: dt.date | None = None
    alternates: set[dt.date] = set()

    if c is Category.EXPLICIT_DATE:
        start = _checked(v)
    elif c is Category.NAMED_WEEKDAY_PAST:
        start = most_recent_weekday(anchor, v, strict=True)
    elif c is Category.NAMED_WEEKDAY_THIS:
        # an upcoming weekday would be in the future; fall back to the latest past one
        start = most_recent_weekday(anchor, v, strict=False)
    elif c is Category.THIS_WEEK:
        start = most_recent_weekday(anchor, SUNDAY, strict=False)
        alternates.add(most_recent_weekday(anchor, MONDAY, strict=False))
    elif c is Category.PAST_WEEK:
        start = add_days(anchor, -7)
    elif c is Category.LAST_WEEKEND:
        start = most_recent_weekday(anchor, SATURDAY, strict=True)
        end = add_days(start, 1)
    elif c is Category.THIS_PAST_WEEKEND:
        start = most_recent_weekday(anchor, SATURDAY, strict=False)
        end = add_days(start, 1)
    elif c is Category.LAST_MONTH:
        start = add_months(anchor.replace(day=1), -1)
        end = month_end(start)
    elif c is Category.LAST_N_DAYS:
        start = add_days(anchor, -(v + 1))
        alternates.add(add_days(anchor, -v))
    elif c is Category.LAST_N_HOURS:
        days = -(-v // 24)
        start = add_days(anchor, -days)
        alternates.add(add_days(anchor, -(days - 1)))
    elif c is Category.PAST_N_MONTHS:
        start = add_months(anchor, -v)
    elif c is Category.THIS_SEASON_NAMED:
        start = season_start(v, anchor)
        end = add_days(add_months(start, 3), -1)
    elif c is Category.LAST_SEASON:
        current = season_start(season_of(anchor), anchor)
        start = add_months(current, -3)
        end = add_days(current, -1)
    elif c is Category.THIS_YEAR:
        start = dt.date(anchor.year, 1, 1)
    elif c is Category.PAST_YEAR:
        start = add_years(anchor, -1)
    elif c is Category.YESTERDAY:
        start = add_days(anchor, -1)
    elif c is Category.SINCE_YEAR:
        if not MIN_YEAR <= v <= MAX_YEAR:
            raise TemporalError(f"year {v} is outside {MIN_YEAR}-{MAX_YEAR}")
        start = dt.date(v, 1, 1)
        end = anchor
    else:  # pragma: no cover - enum is closed
        raise TemporalError(f"unhandled category {c!r}")

    if end is not None and end > anchor:
        end = anchor
    alternates.discard(start)
    if start > anchor or any(a > anchor for a in alternates):
        raise TemporalError(f"{expr.category.value} resolves to a future date relative to {anchor.isoformat()}")
    return ResolvedWindow(start, end, frozenset(alternates))


def ambiguous_starts(expr: TemporalExpression, anchor: dt.date) -> frozenset[dt.date]:
    """Start dates that are a defensible reading of ``expr`` though not the preferred one.

    Covers the astronomical start of a season, both days of a weekend, and
    Sunday/Monday week starts.
    """
    c = expr.category
    try:
        window = resolve(expr, anchor)
    except TemporalError:
        return frozenset()
    out: set[dt.date] = set()
    if c in (Category.THIS_SEASON_NAMED, Category.LAST_SEASON):
        season = expr.value if c is Category.THIS_SEASON_NAMED else season_of(window.start)
        month, day = SEASON_ASTRONOMICAL[season]
        out.add(dt.date(window.start.year, month, day))
    elif c in (Category.LAST_WEEKEND, Category.THIS_PAST_WEEKEND):
        out.update({window.start, add_days(window.start, 1)})
    elif c is Category.THIS_WEEK:
        out.update({window.start, *window.alternates})
    return frozenset(d for d in out if d <= anchor)
