"""JSON run configuration shared by the eval and vet commands.

Relative paths inside a config file resolve against the file's directory.
Without an "out" entry results go to runs/<label> under the working directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .gateway import Backend, HttpBackend, ScriptedBackend
from .pipelines import StrategyConfig
from .textsim import DEFAULT_CUTOFF, check_cutoff


class ConfigError(ValueError):
    pass


BACKEND_KINDS = ("http", "scripted")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "scripted"
    base_url: str | None = None
    api_key_env: str | None = None
    fixtures: Path | None = None
    model: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"backend kind must be one of {BACKEND_KINDS}, got {self.kind!r}")

    def build(self) -> Backend:
        if self.kind == "http":
            if not self.base_url:
                raise ConfigError("http backend needs base_url (or --endpoint)")
            return HttpBackend(self.base_url, api_key_env=self.api_key_env)
        if self.fixtures is None:
            raise ConfigError("scripted backend needs a fixtures path (or --fixtures)")
        if not self.fixtures.is_file():
            raise ConfigError(f"fixtures file not found: {self.fixtures}")
        try:
            return ScriptedBackend.from_file(self.fixtures)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    dataset: Path | None
    strategy: StrategyConfig
    backend: BackendConfig = field(default_factory=BackendConfig)
    judge: BackendConfig | None = None
    concurrency: int = 4
    cutoff: float = DEFAULT_CUTOFF
    synonyms: Path | None = None
    out: Path = Path("runs/latest")
    label: str | None = None

    def __post_init__(self) -> None:
        if self.concurrency < 1:
            raise ConfigError("concurrency must be a positive integer")
        try:
            check_cutoff(self.cutoff)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **changes: Any) -> RunConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


_TOP_KEYS = {"dataset", "strategy", "backend", "judge", "concurrency", "cutoff", "synonyms", "out", "label"}
_BACKEND_KEYS = {"kind", "base_url", "api_key_env", "fixtures", "model"}


def _path(value: Any, base: Path) -> Path | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"expected a path string, got {value!r}")
    p = Path(value)
    return p if p.is_absolute() else base / p


def _backend(raw: Any, base: Path, where: str) -> BackendConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(raw) - _BACKEND_KEYS
    if unknown:
        raise ConfigError(f"unknown {where} keys {sorted(unknown)}")
    return BackendConfig(
        kind=raw.get("kind", "scripted"),
        base_url=raw.get("base_url"),
        api_key_env=raw.get("api_key_env"),
        fixtures=_path(raw.get("fixtures"), base),
        model=raw.get("model"),
    )


def parse_run_config(raw: Any, base: Path) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    strategy_raw = dict(raw.get("strategy") or {"kind": "ad_hoc", "model_a": "model-a"})
    if strategy_raw.get("example_pool"):
        strategy_raw["example_pool"] = str(_path(strategy_raw["example_pool"], base))
    try:
        strategy = StrategyConfig.from_dict(strategy_raw)
        judge = raw.get("judge")
        return RunConfig(
            dataset=_path(raw.get("dataset"), base),
            strategy=strategy,
            backend=_backend(raw.get("backend", {}), base, "backend"),
            judge=_backend(judge, base, "judge") if judge is not None else None,
            concurrency=int(raw.get("concurrency", 4)),
            cutoff=float(raw.get("cutoff", DEFAULT_CUTOFF)),
            synonyms=_path(raw.get("synonyms"), base),
            out=_path(raw["out"], base) if "out" in raw else Path("runs") / (raw.get("label") or "latest"),
            label=raw.get("label"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc.msg}") from None
    return parse_run_config(raw, path.resolve().parent)
