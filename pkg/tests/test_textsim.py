import itertools
from functools import lru_cache
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eoquery.model import EventType
from eoquery.textsim import (
    SynonymTable,
    check_cutoff,
    equivalent,
    indel_distance,
    indel_similarity,
    lcs_length,
    mentioned_in,
    normalize,
)


def lcs_by_recursion(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def test_examples():
    assert indel_similarity("Seoul", "Seoul") == 1.0
    assert indel_similarity("flood", "flooding") == pytest.approx(10 / 13)
    assert indel_similarity("", "abc") == 0.0
    assert indel_similarity("", "") == 1.0
    assert indel_distance("flood", "flooding") == 3


def test_flood_vs_burn_scars():
    # no character in common: LCS = 0, so the similarity is exactly zero
    assert lcs_by_recursion("flood", "burn scars") == 0
    assert indel_similarity("flood", "burn scars") == 0.0
    assert not equivalent("flood", "burn scars", 0.7)


@pytest.mark.parametrize("raw,expected", [
    ("Burn_Scars", "burn scars"),
    ("  Houston,   Texas ", "houston texas"),
    ("crops", "crops"),
    ("", ""),
])
def test_normalize(raw, expected):
    assert normalize(raw) == expected


def test_equivalent_examples():
    assert equivalent("Houston, Texas", "houston texas", 0.7)
    assert equivalent("flooding", "flood", 0.7)
    assert not equivalent("flooding", "flood", 0.8)


def test_cutoff_bounds():
    assert check_cutoff(0) == 0.0
    for bad in (-0.1, 1.5):
        with pytest.raises(ValueError):
            check_cutoff(bad)


@given(st.text(max_size=20), st.text(max_size=20))
def test_symmetry(a, b):
    assert indel_similarity(a, b) == indel_similarity(b, a)


@given(st.text(max_size=20), st.floats(0, 1))
def test_identity_and_self_equivalence(a, cutoff):
    assert indel_similarity(a, a) == 1.0
    assert equivalent(a, a, cutoff)


@given(st.text(alphabet="abc", max_size=9), st.text(alphabet="abc", max_size=9))
def test_lcs_matches_recursive_oracle(a, b):
    assert lcs_length(a, b) == lcs_by_recursion(a, b)


def test_similarity_exact_on_small_binary_strings():
    words = ["".join(p) for n in range(4) for p in itertools.product("ab", repeat=n)]
    for a, b in itertools.product(words, repeat=2):
        total = len(a) + len(b)
        expected = Fraction(1) if total == 0 else 1 - Fraction(total - 2 * lcs_by_recursion(a, b), total)
        assert indel_similarity(a, b) == float(expected)


class TestSynonyms:
    def test_default_table(self):
        table = SynonymTable.default()
        assert table.event_for("Flooding") is EventType.FLOOD
        assert table.event_for("crop types") is EventType.CROPS
        assert table.event_for("burn_scars") is EventType.BURN_SCARS
        assert table.event_for("earthquake") is None

    def test_canonical_name_required(self):
        with pytest.raises(ValueError):
            SynonymTable({EventType.FLOOD: frozenset({"flooding"})})

    def test_load(self, tmp_path):
        path = tmp_path / "syn.json"
        path.write_text('{"flood": ["deluge"]}')
        table = SynonymTable.load(path)
        assert table.event_for("deluge") is EventType.FLOOD
        assert table.event_for("crops") is EventType.CROPS


KANSAS = "Can you find crop types in Kansas as of the last 30 days? Today is June 4, 2024."


def test_mentioned_examples():
    table = SynonymTable.default()
    assert mentioned_in("crops", KANSAS, table)
    assert not mentioned_in("flood", KANSAS, table)
    assert mentioned_in("Seoul", "July 14, 2023, flooding in Seoul")


def test_mentioned_multi_token_area():
    query = "Provide images of recent flooding in Cairo, Egypt, from the past week."
    assert mentioned_in("Cairo, Egypt", query)
    assert mentioned_in("Cairo Egypt", query)
    assert not mentioned_in("Alexandria", query)


def test_mentioned_ignores_anchor_clause():
    assert not mentioned_in("June", "Floods in Lima. Today is June 4, 2024.")


def test_mentioned_empty_phrase():
    assert not mentioned_in("", "anything")
