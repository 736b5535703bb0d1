from __future__ import annotations

import json
from collections import defaultdict
from importlib import resources
from pathlib import Path

import pytest

from eoquery.dataset import load_dataset
from eoquery.gateway import ScriptedBackend

DATA = Path(str(resources.files("eoquery").joinpath("data")))
APPENDIX = DATA / "appendix"


@pytest.fixture(scope="session")
def appendix_dir() -> Path:
    return APPENDIX


@pytest.fixture(scope="session")
def appendix_records():
    return load_dataset(APPENDIX / "dataset.jsonl")


@pytest.fixture(scope="session")
def appendix_replies() -> dict[int, str]:
    """Recorded model output per appendix trace id."""
    records = load_dataset(APPENDIX / "dataset.jsonl")
    backend = ScriptedBackend.from_file(APPENDIX / "fixtures.jsonl")
    by_query = {entry.match: entry.reply for entry in backend.replies}
    return {r.id: by_query[f"Query: {r.query}"] for r in records}


@pytest.fixture(scope="session")
def sample_records():
    return load_dataset(DATA / "sample_dataset.jsonl")


def write_jsonl(path: Path, rows) -> Path:
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


# -- per-criterion pass/fail lines -----------------------------------------------

_criteria: dict[int, dict] = defaultdict(lambda: {"title": "", "outcomes": []})


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria[number]
    entry["title"] = title
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        entry["outcomes"].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = bool(entry["outcomes"]) and all(entry["outcomes"])
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {entry['title']}")
