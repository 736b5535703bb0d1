"""JSON-lines evaluation datasets."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from .model import (
    KNOWN_KEYS,
    AnchorError,
    DateFormatError,
    DateValue,
    EventType,
    GoldenAnswer,
    QueryRecord,
    extract_anchor,
)
from .temporal import parse_temporal


class DatasetError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def record_from_json(obj: Any) -> QueryRecord:
    """Validate one decoded dataset line. Raises ValueError with a readable reason."""
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    extra = set(obj) - {"id", "query", "answer", "expected_error"}
    if extra:
        raise ValueError(f"unexpected record keys {sorted(extra)}")
    rid, query, answer = obj.get("id"), obj.get("query"), obj.get("answer")
    if not isinstance(rid, int) or isinstance(rid, bool):
        raise ValueError(f"id must be an integer, got {rid!r}")
    if not isinstance(query, str) or not query.strip():
        raise ValueError("query must be non-empty text")
    if not isinstance(answer, dict):
        raise ValueError("answer must be a JSON object")
    unknown = set(answer) - KNOWN_KEYS
    if unknown:
        raise ValueError(f"answer has keys outside {sorted(KNOWN_KEYS)}: {sorted(unknown)}")

    error = answer.get("error") or None
    expected_error = obj.get("expected_error", False)
    if not isinstance(expected_error, bool):
        raise ValueError("expected_error must be true or false")
    expected_error = expected_error or error is not None

    area = answer.get("area")
    if area is not None and not isinstance(area, str):
        raise ValueError("area must be text")
    date = DateValue.from_json(answer["date"]) if answer.get("date") is not None else None
    event = answer.get("event_type")
    try:
        event_type = EventType(event) if event is not None else None
    except ValueError:
        raise ValueError(f"unsupported event type {event!r}") from None

    golden = GoldenAnswer(area, date, event_type, expected_error, error)
    anchor = extract_anchor(query)
    expr = parse_temporal(query)
    if anchor is None and expr is not None and expr.is_relative:
        raise ValueError(f"query uses a relative time reference ({expr.category.value}) but has no 'Today is ...' suffix")
    if anchor is not None and date is not None and date.last > anchor:
        raise ValueError(f"golden date {date.last.isoformat()} is after the anchor {anchor.isoformat()}")
    return QueryRecord(rid, query, golden, anchor)


def load_dataset(path: str | Path) -> list[QueryRecord]:
    records: list[QueryRecord] = []
    seen: dict[int, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = record_from_json(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DatasetError(f"malformed JSON: {exc.msg}", lineno) from None
            except (ValueError, DateFormatError, AnchorError) as exc:
                raise DatasetError(str(exc), lineno) from None
            if record.id in seen:
                raise DatasetError(f"duplicate id {record.id} (first seen on line {seen[record.id]})", lineno)
            seen[record.id] = lineno
            records.append(record)
    return records


def dumps_record(record: QueryRecord) -> str:
    return json.dumps(record.to_json(), ensure_ascii=False)


def save_dataset(records: Iterable[QueryRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_record(record) + "\n")


def dataset_id(records: Iterable[QueryRecord]) -> str:
    """Content hash identifying a dataset, independent of record order."""
    digest = hashlib.sha256()
    for line in sorted(dumps_record(r) for r in records):
        digest.update(line.encode("utf-8") + b"\n")
    return digest.hexdigest()[:16]
