"""Chat-completion backends, per-call accounting and the date-consistency judge."""

from __future__ import annotations

import json
import logging
import math
import os
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from string import Template
from typing import Protocol

import httpx

logger = logging.getLogger(__name__)


class GatewayError(Exception):
    """Base class for failures talking to a model backend."""


class TransportError(GatewayError):
    """The backend could not be reached after all retries."""


class BackendError(GatewayError):
    def __init__(self, status: int, message: str):
        super().__init__(f"backend returned HTTP {status}: {message}")
        self.status = status
        self.message = message


class FixtureMissError(GatewayError):
    """No scripted reply matches the call."""


@dataclass(frozen=True)
class ChatCall:
    model_id: str
    system_prompt: str
    user_message: str
    temperature: float = 0.0
    max_output_tokens: int | None = None

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class ChatResult:
    text: str
    input_tokens: int
    output_tokens: int
    latency_ms: int
    estimated: bool = False


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


class Backend(Protocol):
    def complete(self, call: ChatCall) -> ChatResult: ...


def complete(backend: Backend, call: ChatCall) -> ChatResult:
    return backend.complete(call)


class HttpBackend:
    """OpenAI-compatible ``/v1/chat/completions`` client.

    Connection failures, timeouts, 429 and 5xx responses are retried with
    exponential backoff; other non-2xx responses raise BackendError at once.
    """

    def __init__(
        self,
        base_url: str,
        *,
        api_key_env: str | None = None,
        retries: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 60.0,
        max_in_flight: int = 8,
        transport: httpx.BaseTransport | None = None,
    ):
        if retries < 1:
            raise ValueError("retries must be >= 1")
        self.url = base_url.rstrip("/") + "/v1/chat/completions"
        self.retries = retries
        self.backoff_s = backoff_s
        headers = {"Content-Type": "application/json"}
        if api_key_env:
            key = os.environ.get(api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            else:
                logger.warning("environment variable %s is not set; sending no credentials", api_key_env)
        self._client = httpx.Client(headers=headers, timeout=timeout_s, transport=transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def close(self) -> None:
        self._client.close()

    def _payload(self, call: ChatCall) -> dict:
        body = {
            "model": call.model_id,
            "messages": [
                {"role": "system", "content": call.system_prompt},
                {"role": "user", "content": call.user_message},
            ],
            "temperature": call.temperature,
        }
        if call.max_output_tokens is not None:
            body["max_tokens"] = call.max_output_tokens
        return body

    def complete(self, call: ChatCall) -> ChatResult:
        payload = self._payload(call)
        last_error: Exception | None = None
        with self._slots:
            started = time.perf_counter()
            for attempt in range(self.retries):
                if attempt:
                    time.sleep(self.backoff_s * 2 ** (attempt - 1))
                try:
                    response = self._client.post(self.url, json=payload)
                except httpx.TransportError as exc:
                    last_error = exc
                    logger.debug("attempt %d to %s failed: %s", attempt + 1, self.url, exc)
                    continue
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = BackendError(response.status_code, _error_message(response))
                    continue
                if response.status_code >= 300:
                    raise BackendError(response.status_code, _error_message(response))
                latency_ms = round((time.perf_counter() - started) * 1000)
                return _parse_completion(response, call, latency_ms)
        if isinstance(last_error, BackendError):
            raise last_error
        raise TransportError(f"{self.url} unreachable after {self.retries} attempts: {last_error}")


def _error_message(response: httpx.Response) -> str:
    try:
        body = response.json()
    except ValueError:
        return response.text[:500]
    if isinstance(body, dict) and isinstance(body.get("error"), dict):
        return str(body["error"].get("message", body["error"]))
    return json.dumps(body)[:500]


def _parse_completion(response: httpx.Response, call: ChatCall, latency_ms: int) -> ChatResult:
    try:
        body = response.json()
        text = body["choices"][0]["message"]["content"] or ""
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise BackendError(response.status_code, f"malformed completion body: {exc}") from None
    usage = body.get("usage") or {}
    prompt_tokens = usage.get("prompt_tokens")
    completion_tokens = usage.get("completion_tokens")
    estimated = prompt_tokens is None or completion_tokens is None
    if prompt_tokens is None:
        prompt_tokens = estimate_tokens(call.system_prompt + call.user_message)
    if completion_tokens is None:
        completion_tokens = estimate_tokens(text)
    return ChatResult(text, int(prompt_tokens), int(completion_tokens), latency_ms, estimated)


@dataclass(frozen=True)
class ScriptedReply:
    model: str | None
    match: str
    reply: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_ms: int = 0


class ScriptedBackend:
    """Replays canned replies from a JSONL fixture.

    Each fixture line names a model (omit for any model), a substring that must
    occur in the user message, and the reply. The longest matching substring
    wins; on equal length a model-specific line beats a wildcard, then the
    earlier line wins. Latency is the recorded ``latency_ms``
    (default 0), so replays are reproducible.
    """

    def __init__(self, replies: list[ScriptedReply]):
        self.replies = tuple(replies)

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        replies = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    replies.append(ScriptedReply(
                        model=obj.get("model"),
                        match=obj["match"],
                        reply=obj["reply"],
                        prompt_tokens=obj.get("prompt_tokens"),
                        completion_tokens=obj.get("completion_tokens"),
                        latency_ms=obj.get("latency_ms", 0),
                    ))
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad fixture line: {exc}") from None
        return cls(replies)

    def complete(self, call: ChatCall) -> ChatResult:
        best: ScriptedReply | None = None
        for entry in self.replies:
            if entry.model not in (None, call.model_id) or entry.match not in call.user_message:
                continue
            if best is None or (len(entry.match), entry.model is not None) > (len(best.match), best.model is not None):
                best = entry
        if best is None:
            raise FixtureMissError(f"no scripted reply for model {call.model_id!r}: {call.user_message[:120]!r}")
        estimated = best.prompt_tokens is None or best.completion_tokens is None
        prompt_tokens = best.prompt_tokens
        if prompt_tokens is None:
            prompt_tokens = estimate_tokens(call.system_prompt + call.user_message)
        completion_tokens = best.completion_tokens
        if completion_tokens is None:
            completion_tokens = estimate_tokens(best.reply)
        return ChatResult(best.reply, prompt_tokens, completion_tokens, best.latency_ms, estimated)


# -- judge --------------------------------------------------------------------

class Verdict(str, Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class JudgeVerdict:
    outcome: Verdict
    rationale: str


_HEDGE = r"(?:somewhat|partially|partly|mostly|largely|mainly|fairly|not\s+entirely|not\s+fully|not\s+completely)"
_LABEL = r"(?:verdict|judg(?:e)?ment|answer|conclusion|result|assessment)"
_VERDICT_AT = (
    rf"(?P<hedge>{_HEDGE}\s+)?(?P<neg>in|not\s+)?consistent\b"
)
_STARTS_NEGATIVE = re.compile(r"^[\W_]*(?:in|not\s+)consistent", re.IGNORECASE)
_LEADING = re.compile(rf"^[\W_]*(?:{_LABEL}[\s:*\-–—]*)?{_VERDICT_AT}", re.IGNORECASE)
_LABELLED = re.compile(rf"\b{_LABEL}\b[\s:*\-–—\"']*{_VERDICT_AT}", re.IGNORECASE)
_HEDGED_ANYWHERE = re.compile(rf"\b{_HEDGE}\s+(?:in)?consistent\b", re.IGNORECASE)
_POSITIVE_ANYWHERE = re.compile(r"(?<!not\s)\bconsistent\b", re.IGNORECASE)
_NEGATIVE_ANYWHERE = re.compile(r"inconsistent|\bnot\s+consistent\b", re.IGNORECASE)


def _from_match(m: re.Match) -> Verdict:
    if m["hedge"]:
        return Verdict.INDETERMINATE
    return Verdict.INCONSISTENT if m["neg"] else Verdict.CONSISTENT


def parse_verdict(reply: str) -> JudgeVerdict:
    """Read a consistent/inconsistent verdict from free judge text.

    A verdict at the very start (optionally after a label such as "Verdict:")
    decides. Otherwise a labelled verdict anywhere decides. Otherwise the text
    must mention exactly one polarity. Hedged wording ("somewhat consistent")
    and anything else is indeterminate.
    """
    if _STARTS_NEGATIVE.match(reply):
        return JudgeVerdict(Verdict.INCONSISTENT, reply)
    for pattern in (_LEADING, _LABELLED):
        m = pattern.search(reply)
        if m:
            return JudgeVerdict(_from_match(m), reply)
    if _HEDGED_ANYWHERE.search(reply):
        return JudgeVerdict(Verdict.INDETERMINATE, reply)
    negative = bool(_NEGATIVE_ANYWHERE.search(reply))
    positive = bool(_POSITIVE_ANYWHERE.search(reply))
    if negative and not positive:
        return JudgeVerdict(Verdict.INCONSISTENT, reply)
    if positive and not negative:
        return JudgeVerdict(Verdict.CONSISTENT, reply)
    return JudgeVerdict(Verdict.INDETERMINATE, reply)


def load_prompt(name: str) -> str:
    return resources.files("eoquery").joinpath(f"prompts/{name}.txt").read_text(encoding="utf-8")


def judge_message(query: str, answer_json: str) -> str:
    return Template(load_prompt("judge_user").rstrip("\n")).substitute(query=query, answer=answer_json)


def judge_date_consistency(backend: Backend, query: str, answer_json: str, model_id: str) -> JudgeVerdict:
    """Ask ``model_id`` whether the answer's dates follow from the query."""
    call = ChatCall(model_id, load_prompt("judge_system"), judge_message(query, answer_json))
    return parse_verdict(backend.complete(call).text)


@dataclass(frozen=True)
class Judge:
    """A backend bound to a judge model; callable as ``judge(query, answer_json)``."""

    backend: Backend
    model_id: str

    def __call__(self, query: str, answer_json: str) -> JudgeVerdict:
        return judge_date_consistency(self.backend, query, answer_json, self.model_id)
