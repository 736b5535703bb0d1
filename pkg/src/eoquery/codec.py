"""Pull the JSON answer out of raw completion text and map it onto an ExtractedAnswer."""

from __future__ import annotations

import json
from typing import Any

from .model import KNOWN_KEYS, DateFormatError, DateValue, ExtractedAnswer


def _balanced_end(text: str, start: int) -> int | None:
    """Index one past the brace closing the one at ``start``, skipping string literals."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def extract_json_substring(raw: str) -> str | None:
    """Return the first brace-balanced substring of ``raw`` that parses as a JSON object.

    Candidates are scanned left to right. A balanced candidate that fails to
    parse is skipped as a whole; an unbalanced one is skipped by one character.
    """
    pos = raw.find("{")
    while pos != -1:
        end = _balanced_end(raw, pos)
        if end is None:
            pos = raw.find("{", pos + 1)
            continue
        candidate = raw[pos:end]
        try:
            if isinstance(json.loads(candidate), dict):
                return candidate
        except ValueError:
            pass
        pos = raw.find("{", end)
    return None


def _text_field(obj: dict[str, Any], key: str, errors: list[tuple[str, str]]) -> str | None:
    value = obj.get(key)
    if value is None or isinstance(value, str):
        return value
    errors.append((key, f"expected text, got {json.dumps(value)}"))
    return None


def parse_answer_obj(obj: dict[str, Any]) -> ExtractedAnswer:
    errors: list[tuple[str, str]] = []
    area = _text_field(obj, "area", errors)
    event_type = _text_field(obj, "event_type", errors)

    error_value = obj.get("error")
    if error_value is None or error_value == "":
        error = None
    elif isinstance(error_value, str):
        error = error_value
    else:
        # a non-text error payload still signals an error was reported
        error = json.dumps(error_value)

    date = None
    if obj.get("date") is not None:
        try:
            date = DateValue.from_json(obj["date"])
        except DateFormatError as exc:
            errors.append(("date", str(exc)))

    return ExtractedAnswer(
        area=area,
        date=date,
        event_type=event_type,
        error=error,
        unknown_keys=frozenset(k for k in obj if k not in KNOWN_KEYS),
        field_errors=tuple(errors),
    )


def parse_answer(json_text: str) -> ExtractedAnswer:
    """Parse a JSON object string into an ExtractedAnswer.

    Malformed field values never raise; they are recorded in ``field_errors``.
    Raises ValueError only when ``json_text`` is not a JSON object at all.
    """
    obj = json.loads(json_text)
    if not isinstance(obj, dict):
        raise ValueError("answer JSON is not an object")
    return parse_answer_obj(obj)


def extract_answer(raw: str) -> tuple[ExtractedAnswer | None, str | None]:
    """Convenience: locate and parse the answer in one step. Returns (answer, json_text)."""
    json_text = extract_json_substring(raw)
    if json_text is None:
        return None, None
    return parse_answer(json_text), json_text
