"""Write src/eoquery/data/sample_dataset.jsonl: 100 templated queries with golden
answers computed by the temporal resolver. Seeded, so reruns are identical.

    python3 scripts/make_sample_dataset.py
"""

from __future__ import annotations

import datetime as dt
import random
from pathlib import Path

from eoquery.dataset import save_dataset
from eoquery.model import DateValue, EventType, GoldenAnswer, QueryRecord, augment_with_anchor
from eoquery.temporal import parse_temporal, resolve

OUT = Path(__file__).resolve().parents[1] / "src" / "eoquery" / "data" / "sample_dataset.jsonl"
SEED = 20240604
COUNT = 100

AREAS = [
    "Houston, Texas", "Cairo, Egypt", "Kansas", "the Netherlands", "Nova Scotia", "Lagos, Nigeria",
    "Kyoto, Japan", "Paris, France", "Tasmania", "the Amazon", "Bangkok, Thailand", "Morocco",
    "California", "Punjab, India", "Queensland, Australia", "Iowa", "Bavaria, Germany", "Chile",
]
EVENTS = {
    EventType.FLOOD: ["flooding", "floods", "flood events"],
    EventType.BURN_SCARS: ["burn scars", "burned areas"],
    EventType.CROPS: ["crop types", "cropland"],
}
TIMES = [
    "this past Tuesday", "last Friday", "this past weekend", "last weekend", "this week", "the past week",
    "last month", "the past three months", "the last 30 days", "the last 48 hours", "the last 10 days",
    "this spring", "this summer", "last season", "this year", "the past year", "yesterday", "since 2020",
]
VERBS = ["Show", "Display", "Find", "Highlight", "Provide images of"]
UNSUPPORTED = ["earthquake damage", "landslides", "oil spills"]


def templated(rng: random.Random, rid: int) -> QueryRecord:
    anchor = dt.date(2024, 1, 1) + dt.timedelta(days=rng.randrange(366))
    area = rng.choice(AREAS)
    if rid % 10 == 9:
        hazard = rng.choice(UNSUPPORTED)
        query = augment_with_anchor(f"{rng.choice(VERBS)} {hazard} in {area} from {rng.choice(TIMES)}.", anchor)
        golden = GoldenAnswer(area, None, None, expected_error=True, error="Unsupported event type")
        return QueryRecord(rid, query, golden, anchor)
    event = rng.choice(list(EVENTS))
    phrase = rng.choice(EVENTS[event])
    if rid % 7 == 0:
        day = anchor - dt.timedelta(days=rng.randrange(1, 400))
        when = f"on {day.strftime('%B')} {day.day}, {day.year}"
        query = f"{rng.choice(VERBS)} {phrase} in {area} {when}."
        return QueryRecord(rid, query, GoldenAnswer(area, DateValue.single(day), event), None)
    query = augment_with_anchor(f"{rng.choice(VERBS)} {phrase} in {area} from {rng.choice(TIMES)}.", anchor)
    window = resolve(parse_temporal(query), anchor)
    return QueryRecord(rid, query, GoldenAnswer(area, DateValue.single(window.start), event), anchor)


def main() -> None:
    rng = random.Random(SEED)
    save_dataset([templated(rng, rid) for rid in range(1, COUNT + 1)], OUT)


if __name__ == "__main__":
    main()
