"""Regenerate the bundled date-equivalence replay set under src/eoquery/data/appendix/.

The 24 queries, recorded model answers and golden answers are transcribed
below. Recorded answers that elide the middle of a daily enumeration are
expanded back to the full run of days.

    python3 scripts/build_appendix.py
"""

from __future__ import annotations

import datetime as dt
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "eoquery" / "data" / "appendix"
EXTRACT_PROMPT_TOKENS = 260
JUDGE_PROMPT_TOKENS = 150


def days(first: str, last: str) -> list[str]:
    a, b = dt.date.fromisoformat(first), dt.date.fromisoformat(last)
    return [(a + dt.timedelta(n)).isoformat() for n in range((b - a).days + 1)]


# id, query, recorded answer, golden answer, judge reply
TRACES = [
    (60, "Provide the latest imagery of flooding in Houston, Texas, from this past Tuesday. Today is June 4, 2024.",
     {"area": "Houston, Texas", "date": "2024-06-02", "event_type": "flood", "error": ""},
     {"area": "Houston, Texas", "date": "2024-05-28", "event_type": "flood"},
     "Inconsistent. This past Tuesday relative to June 4, 2024 is May 28, 2024; June 2 is a Sunday."),
    (63, "Highlight recent flooding events in the UK from this past Spring. Today is June 4, 2024.",
     {"area": "UK", "date": days("2024-03-01", "2024-05-31"), "event_type": "flood"},
     {"area": "UK", "date": "2024-03-01", "event_type": "flood"},
     "Consistent. The dates span March 1 to May 31, 2024, which is this past spring."),
    (66, "Display the latest flooding events in Toronto, Canada, from last month. Today is June 4, 2024.",
     {"area": "Toronto, Canada", "date": days("2024-05-01", "2024-05-31"), "event_type": "flood", "error": ""},
     {"area": "Toronto, Canada", "date": "2024-05-01", "event_type": "flood"},
     "Consistent. Last month is May 2024 and every listed date falls in May."),
    (67, "Show satellite imagery of burn scars in Morocco from this year. Today is June 4, 2024.",
     {"area": "Morocco", "date": days("2024-01-01", "2024-06-04"), "event_type": "burn_scars"},
     {"area": "Morocco", "date": "2024-01-01", "event_type": "burn_scars"},
     "consistent."),
    (68, "Can you find crop types in Kansas as of the last 30 days? Today is June 4, 2024.",
     {"area": "Kansas", "date": days("2024-05-05", "2024-06-04"), "error": "Event type not specified"},
     {"area": "Kansas", "date": "2024-05-04", "event_type": "crops"},
     "Inconsistent: the dates cover the last 30 days, but the response also contains an error message "
     "stating that the event type is not specified."),
    (69, "Provide images of recent flooding in Cairo, Egypt, from the past week. Today is June 4, 2024.",
     {"area": "Cairo, Egypt", "date": days("2024-05-28", "2024-06-03"), "event_type": "flood", "error": ""},
     {"area": "Cairo, Egypt", "date": "2024-05-28", "event_type": "flood"},
     "Consistent. The past week before June 4, 2024 runs from May 28."),
    (73, "Find burn scars in the Kalahari Desert from the past three months. Today is June 4, 2024.",
     {"area": "Kalahari Desert", "date": ["2024-03-01", "2024-04-01", "2024-05-01", "2024-06-01"],
      "event_type": "burn_scars", "error": ""},
     {"area": "Kalahari Desert", "date": "2024-03-04", "event_type": "burn_scars"},
     "Consistent. The dates fall within the past three months."),
    (74, "Can you show crop types in the Netherlands observed last weekend? Today is June 4, 2024.",
     {"area": "Netherlands", "date": ["2024-06-01", "2024-06-02", "2024-06-03"], "error": "Event type not specified"},
     {"area": "Netherlands", "date": "2024-06-01", "event_type": "crops"},
     "Inconsistent. June 3, 2024 is a Monday and not part of last weekend."),
    (75, "Highlight flooding events in Lima, Peru, from this Spring. Today is June 4, 2024.",
     {"area": "Lima, Peru", "date": days("2024-03-20", "2024-06-04"), "event_type": "flood", "error": ""},
     {"area": "Lima, Peru", "date": "2024-03-01", "event_type": "flood"},
     "Somewhat consistent. Spring can be taken to begin at the equinox, although June 4 is already summer."),
    (79, "Find burn scars in the Andes Mountains from last season. Today is June 4, 2024.",
     {"area": "Andes Mountains",
      "date": ["2023-12-01", "2023-12-31", "2024-01-01", "2024-01-31", "2024-02-01", "2024-02-28",
               "2024-03-01", "2024-03-31"],
      "event_type": "burn_scars", "error": ""},
     {"area": "Andes Mountains", "date": "2024-03-01", "event_type": "burn_scars"},
     "Inconsistent. Last season relative to June 4, 2024 is spring, March through May, not winter."),
    (80, "Display the latest crop types in Israel observed this Friday. Today is June 4, 2024.",
     {"area": "Israel", "date": "2024-06-07", "error": "Event type not specified"},
     {"area": "Israel", "date": "2024-05-31", "event_type": "crops"},
     "Inconsistent. June 7, 2024 is after today."),
    (84, "Display recent flooding in New York City from the last 48 hours. Today is June 4, 2024.",
     {"area": "New York City", "date": ["2024-06-02", "2024-06-03", "2024-06-04"], "event_type": "flood", "error": ""},
     {"area": "New York City", "date": "2024-06-02", "event_type": "flood"},
     "Consistent. The last 48 hours reach back to June 2."),
    (85, "Find the most recent burn scars in Fiji from the past year. Today is June 4, 2024.",
     {"area": "Fiji", "date": ["2023-01-01", "2023-12-31"], "event_type": "burn_scars", "error": ""},
     {"area": "Fiji", "date": "2023-06-04", "event_type": "burn_scars"},
     "Inconsistent. The past year runs from June 4, 2023, not calendar year 2023."),
    (87, "Highlight flooding events in Paris, France, from last weekend. Today is June 4, 2024.",
     {"area": "Paris, France", "date": ["2024-06-01", "2024-06-02", "2024-06-03"], "event_type": "flood", "error": ""},
     {"area": "Paris, France", "date": "2024-06-01", "event_type": "flood"},
     "Inconsistent. June 3, 2024 is a Monday."),
    (88, "Display satellite imagery of burn scars in Tasmania from this summer. Today is June 4, 2024.",
     {"area": "Tasmania", "date": days("2023-12-01", "2024-03-31"), "event_type": "burn_scars", "error": ""},
     {"area": "Tasmania", "date": "2024-06-01", "event_type": "burn_scars"},
     "Consistent. Tasmania is in the Southern Hemisphere, where summer runs from December."),
    (89, "Can you find crop types in Egypt observed last Thursday? Today is June 4, 2024.",
     {"area": "Egypt", "error": "Event type not found. Also, 'crop types' is not a valid event type. "
                                "It should be either 'burn_scars' or 'flood'."},
     {"area": "Egypt", "date": "2024-05-30", "event_type": "crops"},
     "Inconsistent. The answer gives no date although the query names last Thursday."),
    (91, "Display burn scars in Nova Scotia from last month. Today is June 4, 2024.",
     {"area": "Nova Scotia", "date": days("2024-05-01", "2024-05-31"), "event_type": "burn_scars", "error": ""},
     {"area": "Nova Scotia", "date": "2024-05-01", "event_type": "burn_scars"},
     "Consistent. All dates fall in May 2024."),
    (92, "Highlight crop types in Argentina seen this past weekend. Today is June 4, 2024.",
     {"area": "Argentina", "date": "2024-06-02", "error": "Event type not specified"},
     {"area": "Argentina", "date": "2024-06-01", "event_type": "crops"},
     "Consistent. June 2, 2024 is the Sunday of this past weekend."),
    (94, "Show the most recent burn scars in the Pyrenees from this week. Today is June 4, 2024.",
     {"area": "Pyrenees", "date": ["2024-06-01", "2024-06-02", "2024-06-03", "2024-06-04"],
      "event_type": "burn_scars", "error": ""},
     {"area": "Pyrenees", "date": "2024-06-02", "event_type": "burn_scars"},
     "Inconsistent. June 1, 2024 is a Saturday and belongs to the previous week."),
    (96, "Provide images of flooding in Lagos, Nigeria, from the last 72 hours. Today is June 6, 2024.",
     {"area": "Lagos, Nigeria", "date": ["2024-06-04", "2024-06-05", "2024-06-06"], "event_type": "flood", "error": ""},
     {"area": "Lagos, Nigeria", "date": "2024-06-04", "event_type": "flood"},
     "Consistent. The last 72 hours before June 6 cover June 4 to June 6."),
    (97, "Show burn scars in the Everglades from last season. Today is June 4, 2024.",
     {"area": "Everglades",
      "date": ["2023-06-01", "2023-08-31", "2023-09-01", "2023-11-30", "2023-12-01", "2023-12-31"],
      "event_type": "burn_scars", "error": ""},
     {"area": "Everglades", "date": "2024-03-01", "event_type": "burn_scars"},
     "Inconsistent. These dates describe seasons of the previous year rather than last season."),
    (102, "Provide satellite images of flooding in Kyoto, Japan, from this year. Today is June 4, 2024.",
     {"area": "Kyoto, Japan", "date": ["2024-01-01", "2024-02-01", "2024-03-01", "2024-04-01", "2024-05-01",
                                       "2024-06-01"],
      "event_type": "flood", "error": ""},
     {"area": "Kyoto, Japan", "date": "2024-01-01", "event_type": "flood"},
     "Consistent. All dates fall within 2024 and before today."),
    (105, "Highlight recent flooding events in Bangkok, Thailand, from the past week. Today is June 4, 2024.",
     {"area": "Bangkok, Thailand", "date": days("2024-05-28", "2024-06-03"), "event_type": "flood", "error": ""},
     {"area": "Bangkok, Thailand", "date": "2024-05-28", "event_type": "flood"},
     "Consistent. The dates cover the past week."),
    (106, "Show burn scars in the Amazon from this Spring. Today is June 4, 2024.",
     {"area": "Amazon", "date": ["2024-03-20"], "event_type": "burn_scars", "error": ""},
     {"area": "Amazon", "date": "2024-03-01", "event_type": "burn_scars"},
     "Somewhat consistent. March 20 is the vernal equinox, one reasonable start of spring."),
]


def tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    dataset, fixtures, judge = [], [], []
    for rid, query, recorded, golden, verdict in TRACES:
        dataset.append({"id": rid, "query": query, "answer": golden})
        reply = json.dumps(recorded, indent=2)
        fixtures.append({
            "match": f"Query: {query}",
            "reply": reply,
            "prompt_tokens": EXTRACT_PROMPT_TOKENS + tokens(query),
            "completion_tokens": tokens(reply),
            "latency_ms": 400 + 5 * tokens(reply),
        })
        judge.append({
            "model": "judge",
            "match": f"Query: {query}\nAnswer:",
            "reply": verdict,
            "prompt_tokens": JUDGE_PROMPT_TOKENS + tokens(query) + tokens(reply),
            "completion_tokens": tokens(verdict),
        })
    for name, rows in (("dataset.jsonl", dataset), ("fixtures.jsonl", fixtures), ("judge_fixtures.jsonl", judge)):
        with open(OUT / name, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    run = {
        "label": "appendix-replay",
        "dataset": "dataset.jsonl",
        "strategy": {"kind": "cot", "model_a": "llama-3.1-405b"},
        "backend": {"kind": "scripted", "fixtures": "fixtures.jsonl"},
        "judge": {"kind": "scripted", "fixtures": "judge_fixtures.jsonl", "model": "judge"},
        "concurrency": 4,
        "cutoff": 0.7,
    }
    (OUT / "run.json").write_text(json.dumps(run, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
