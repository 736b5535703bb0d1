"""Extraction strategies: zero-shot, chain of thought, few-shot, self-refinement,
and split-generate-synthesize."""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Sequence

from .codec import extract_answer, extract_json_substring
from .dataset import load_dataset
from .gateway import Backend, ChatCall, ChatResult, GatewayError, load_prompt
from .model import ExtractedAnswer, QueryRecord


class StrategyKind(str, Enum):
    AD_HOC = "ad_hoc"
    COT = "cot"
    FEW_SHOT = "few_shot"
    SELF_REFINE = "self_refine"
    SGS = "sgs"


class CallRole(str, Enum):
    GENERATE = "generate"
    REFINE = "refine"
    SPLIT_AREA_EVENT = "split_area_event"
    SPLIT_DATE = "split_date"
    SYNTHESIZE = "synthesize"


@dataclass(frozen=True)
class StrategyConfig:
    kind: StrategyKind
    model_a: str
    model_b: str | None = None
    model_c: str | None = None
    few_shot_k: int = 0
    example_pool: str | None = None
    seed: int = 0
    refine_iterations: int = 1
    temperature: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if not self.model_a:
            raise ValueError("model_a is required")
        if self.kind is StrategyKind.SELF_REFINE and not self.model_b:
            raise ValueError("self_refine needs model_b (the refiner)")
        if self.kind is StrategyKind.SGS and not (self.model_b and self.model_c):
            raise ValueError("sgs needs model_b (date) and model_c (synthesizer)")
        if self.kind is StrategyKind.FEW_SHOT and self.few_shot_k > 0 and not self.example_pool:
            raise ValueError("few_shot with k > 0 needs an example_pool")
        if self.few_shot_k < 0 or self.refine_iterations < 1:
            raise ValueError("few_shot_k must be >= 0 and refine_iterations >= 1")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> StrategyConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown strategy keys {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["kind"] = self.kind.value
        return out


@dataclass(frozen=True)
class CallRecord:
    role: CallRole
    call: ChatCall
    result: ChatResult


@dataclass(frozen=True)
class PipelineTrace:
    calls: tuple[CallRecord, ...] = ()
    rationale: str | None = None

    @property
    def total_input_tokens(self) -> int:
        return sum(c.result.input_tokens for c in self.calls)

    @property
    def total_output_tokens(self) -> int:
        return sum(c.result.output_tokens for c in self.calls)

    @property
    def total_tokens(self) -> int:
        return self.total_input_tokens + self.total_output_tokens

    @property
    def total_latency_ms(self) -> int:
        return sum(c.result.latency_ms for c in self.calls)

    @property
    def estimated(self) -> bool:
        return any(c.result.estimated for c in self.calls)

    @property
    def final_text(self) -> str:
        return self.calls[-1].result.text if self.calls else ""


class PipelineError(Exception):
    """A backend call failed mid-pipeline; ``trace`` holds the calls that completed."""

    def __init__(self, cause: GatewayError, trace: PipelineTrace):
        super().__init__(str(cause))
        self.cause = cause
        self.trace = trace


def _call(model: str, system: str, user: str, cfg: StrategyConfig) -> ChatCall:
    return ChatCall(model, system, user, temperature=cfg.temperature)


def _run(backend: Backend, role: CallRole, call: ChatCall, done: list[CallRecord]) -> ChatResult:
    try:
        result = backend.complete(call)
    except GatewayError as exc:
        raise PipelineError(exc, PipelineTrace(tuple(done))) from exc
    done.append(CallRecord(role, call, result))
    return result


def _query_message(query: str) -> str:
    return f"Query: {query}"


def run_ad_hoc(cfg: StrategyConfig, backend: Backend, query: str) -> tuple[ExtractedAnswer | None, PipelineTrace]:
    calls: list[CallRecord] = []
    call = _call(cfg.model_a, load_prompt("extract_system"), _query_message(query), cfg)
    result = _run(backend, CallRole.GENERATE, call, calls)
    answer, _ = extract_answer(result.text)
    return answer, PipelineTrace(tuple(calls))


def run_cot(cfg: StrategyConfig, backend: Backend, query: str) -> tuple[ExtractedAnswer | None, PipelineTrace]:
    calls: list[CallRecord] = []
    system = load_prompt("extract_system") + load_prompt("cot_suffix")
    result = _run(backend, CallRole.GENERATE, _call(cfg.model_a, system, _query_message(query), cfg), calls)
    answer, json_text = extract_answer(result.text)
    rationale = None
    if json_text is not None:
        rationale = result.text[: result.text.index(json_text)].strip()
    return answer, PipelineTrace(tuple(calls), rationale)


@lru_cache(maxsize=8)
def _load_pool(path: str) -> tuple[QueryRecord, ...]:
    return tuple(load_dataset(path))


def sample_examples(pool: Sequence[QueryRecord], k: int, seed: int) -> list[QueryRecord]:
    if k > len(pool):
        raise ValueError(f"example pool has {len(pool)} records, {k} requested")
    ordered = sorted(pool, key=lambda r: r.id)
    return random.Random(seed).sample(ordered, k)


def few_shot_message(query: str, examples: Sequence[QueryRecord]) -> str:
    parts = [
        f"Query: {ex.query}\nAnswer: {json.dumps(ex.golden.to_json(), ensure_ascii=False)}"
        for ex in examples
    ]
    parts.append(_query_message(query))
    return "\n\n".join(parts)


def run_few_shot(
    cfg: StrategyConfig,
    backend: Backend,
    query: str,
    rng_seed: int | None = None,
    *,
    pool: Sequence[QueryRecord] | None = None,
    record_id: int | None = None,
) -> tuple[ExtractedAnswer | None, PipelineTrace]:
    """Prefix the query with ``few_shot_k`` demonstrations drawn from the example pool.

    The pool must not contain the record under evaluation (checked by id and by
    query text). With k = 0 the call is identical to ``run_ad_hoc``.
    """
    seed = cfg.seed if rng_seed is None else rng_seed
    examples: list[QueryRecord] = []
    if cfg.few_shot_k:
        if pool is None:
            pool = _load_pool(str(Path(cfg.example_pool)))
        leaked = [r.id for r in pool if r.id == record_id or r.query == query]
        if leaked:
            raise ValueError(f"example pool contains the evaluated record (id {leaked[0]})")
        examples = sample_examples(pool, cfg.few_shot_k, seed)
    calls: list[CallRecord] = []
    call = _call(cfg.model_a, load_prompt("extract_system"), few_shot_message(query, examples), cfg)
    result = _run(backend, CallRole.GENERATE, call, calls)
    answer, _ = extract_answer(result.text)
    return answer, PipelineTrace(tuple(calls))


def refine_message(query: str, draft: str) -> str:
    return f"{_query_message(query)}\nDraft answer: {draft.strip()}"


def run_self_refine(cfg: StrategyConfig, backend: Backend, query: str) -> tuple[ExtractedAnswer | None, PipelineTrace]:
    """Model a drafts, model b reviews the draft against the same rules (``refine_iterations`` times)."""
    calls: list[CallRecord] = []
    draft = _run(backend, CallRole.GENERATE,
                 _call(cfg.model_a, load_prompt("extract_system"), _query_message(query), cfg), calls).text
    for _ in range(cfg.refine_iterations):
        draft_json = extract_json_substring(draft)
        call = _call(cfg.model_b, load_prompt("refine_system"), refine_message(query, draft_json or draft), cfg)
        draft = _run(backend, CallRole.REFINE, call, calls).text
    answer, _ = extract_answer(draft)
    return answer, PipelineTrace(tuple(calls))


PARTIAL_KEYS = {
    CallRole.SPLIT_AREA_EVENT: ("area", "event_type", "error"),
    CallRole.SPLIT_DATE: ("date", "error"),
}


def partial_json(text: str, role: CallRole) -> str:
    """Keep only the keys the subtask is responsible for; ``{}`` when nothing parses."""
    found = extract_json_substring(text)
    if found is None:
        return "{}"
    obj = json.loads(found)
    kept = {k: obj[k] for k in PARTIAL_KEYS[role] if k in obj}
    return json.dumps(kept, ensure_ascii=False)


def split_message(query: str, role: CallRole) -> str:
    subtask = "area and event type" if role is CallRole.SPLIT_AREA_EVENT else "date"
    return f"Subtask: {subtask}\n{_query_message(query)}"


def synthesize_message(query: str, area_event: str, date: str) -> str:
    return f"{_query_message(query)}\nArea and event answer: {area_event}\nDate answer: {date}"


def run_sgs(cfg: StrategyConfig, backend: Backend, query: str) -> tuple[ExtractedAnswer | None, PipelineTrace]:
    """Area/event (model a) and date (model b) run concurrently, model c merges them."""
    split_calls = {
        CallRole.SPLIT_AREA_EVENT: _call(cfg.model_a, load_prompt("split_area_event_system"),
                                         split_message(query, CallRole.SPLIT_AREA_EVENT), cfg),
        CallRole.SPLIT_DATE: _call(cfg.model_b, load_prompt("split_date_system"),
                                   split_message(query, CallRole.SPLIT_DATE), cfg),
    }
    with ThreadPoolExecutor(max_workers=2) as pool:
        futures = {role: pool.submit(backend.complete, call) for role, call in split_calls.items()}
    calls: list[CallRecord] = []
    failure: GatewayError | None = None
    for role, future in futures.items():
        try:
            calls.append(CallRecord(role, split_calls[role], future.result()))
        except GatewayError as exc:
            failure = failure or exc
    if failure is not None:
        raise PipelineError(failure, PipelineTrace(tuple(calls)))

    area_event = partial_json(calls[0].result.text, CallRole.SPLIT_AREA_EVENT)
    date = partial_json(calls[1].result.text, CallRole.SPLIT_DATE)
    call = _call(cfg.model_c, load_prompt("synthesize_system"), synthesize_message(query, area_event, date), cfg)
    result = _run(backend, CallRole.SYNTHESIZE, call, calls)
    answer, _ = extract_answer(result.text)
    return answer, PipelineTrace(tuple(calls))


@dataclass
class StrategyRunner:
    """Dispatches a query to the configured strategy."""

    cfg: StrategyConfig
    backend: Backend
    pool: Sequence[QueryRecord] | None = field(default=None)

    def __call__(self, query: str, record_id: int | None = None) -> tuple[ExtractedAnswer | None, PipelineTrace]:
        kind = self.cfg.kind
        if kind is StrategyKind.AD_HOC:
            return run_ad_hoc(self.cfg, self.backend, query)
        if kind is StrategyKind.COT:
            return run_cot(self.cfg, self.backend, query)
        if kind is StrategyKind.FEW_SHOT:
            return run_few_shot(self.cfg, self.backend, query, pool=self.pool, record_id=record_id)
        if kind is StrategyKind.SELF_REFINE:
            return run_self_refine(self.cfg, self.backend, query)
        return run_sgs(self.cfg, self.backend, query)
