"""String normalisation, indel similarity and synonym-aware mention checks."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from .model import EventType, strip_anchor

DEFAULT_CUTOFF = 0.7
MAX_WINDOW_TOKENS = 4

_NON_WORD = re.compile(r"[\W_]+")


def check_cutoff(cutoff: float) -> float:
    cutoff = float(cutoff)
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError(f"similarity cutoff must be within [0, 1], got {cutoff}")
    return cutoff


def lcs_length(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if ca == cb else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def indel_distance(a: str, b: str) -> int:
    """Edit distance with insertions and deletions only."""
    return len(a) + len(b) - 2 * lcs_length(a, b)


def indel_similarity(a: str, b: str) -> float:
    """1 - indel_distance / (|a| + |b|), computed as 2*LCS / (|a| + |b|) so the
    result is the correctly rounded value of the exact ratio."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    return 2 * lcs_length(a, b) / total


def normalize(text: str) -> str:
    """Lowercase, turn punctuation and underscores into spaces, collapse whitespace."""
    return " ".join(_NON_WORD.sub(" ", text.lower()).split())


def equivalent(a: str, b: str, cutoff: float = DEFAULT_CUTOFF) -> bool:
    return indel_similarity(normalize(a), normalize(b)) >= cutoff


@dataclass(frozen=True)
class SynonymTable:
    """Surface phrases for each event type, stored normalised."""

    phrases: Mapping[EventType, frozenset[str]]

    def __post_init__(self) -> None:
        for event in EventType:
            names = self.phrases.get(event)
            if not names or normalize(event.value) not in names:
                raise ValueError(f"synonym table must list {event.value!r} for itself")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, list[str]]) -> SynonymTable:
        table: dict[EventType, set[str]] = {e: {normalize(e.value)} for e in EventType}
        for key, values in raw.items():
            event = EventType(key)
            table[event].update(normalize(v) for v in values)
        return cls({e: frozenset(v) for e, v in table.items()})

    @classmethod
    def load(cls, path: str | Path) -> SynonymTable:
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))

    @classmethod
    def default(cls) -> SynonymTable:
        return _default_table()

    def event_for(self, phrase: str) -> EventType | None:
        norm = normalize(phrase)
        for event, names in self.phrases.items():
            if norm in names:
                return event
        return None


@lru_cache(maxsize=1)
def _default_table() -> SynonymTable:
    text = resources.files("eoquery").joinpath("data/synonyms.json").read_text(encoding="utf-8")
    return SynonymTable.from_mapping(json.loads(text))


def _contains_tokens(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    return any(haystack[i:i + n] == needle for i in range(len(haystack) - n + 1))


def mentioned_in(
    phrase: str,
    query: str,
    synonyms: SynonymTable | None = None,
    cutoff: float = DEFAULT_CUTOFF,
) -> bool:
    """True when ``phrase`` (or a synonym of the event type it names) appears in ``query``.

    Besides exact token matches, any window of 1-4 query tokens whose
    similarity to a candidate reaches ``cutoff`` counts as a mention.
    """
    norm = normalize(phrase)
    if not norm:
        return False
    candidates = {norm}
    event = synonyms.event_for(phrase) if synonyms else None
    if event is not None:
        candidates |= synonyms.phrases[event]

    tokens = normalize(strip_anchor(query)).split()
    windows = [
        " ".join(tokens[i:i + size])
        for size in range(1, MAX_WINDOW_TOKENS + 1)
        for i in range(len(tokens) - size + 1)
    ]
    for cand in candidates:
        if _contains_tokens(tokens, cand.split()):
            return True
        if any(indel_similarity(cand, w) >= cutoff for w in windows):
            return True
    return False
