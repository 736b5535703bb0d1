"""Batch evaluation: run a strategy over a dataset, aggregate metrics, account tokens
and time, vet golden answers, and compare runs."""

from __future__ import annotations

import csv
import json
import logging
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .dataset import dataset_id
from .gateway import Backend, GatewayError, Judge, JudgeVerdict, Verdict, judge_date_consistency
from .metrics import METRIC_NAMES, FailureCategory, MetricReport, evaluate_sample, golden_output
from .model import QueryRecord
from .pipelines import PipelineError, PipelineTrace, StrategyConfig, StrategyRunner
from .textsim import DEFAULT_CUTOFF, SynonymTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleOutcome:
    record_id: int
    report: MetricReport | None
    trace: PipelineTrace | None
    error: str | None = None
    judge_tokens: int = 0

    @property
    def errored(self) -> bool:
        return self.report is None

    def to_json(self) -> dict[str, Any]:
        if self.report is None:
            return {"record_id": self.record_id, "errored": True, "error": self.error}
        out = self.report.to_json()
        out.update(
            errored=False,
            input_tokens=self.trace.total_input_tokens,
            output_tokens=self.trace.total_output_tokens,
            latency_ms=self.trace.total_latency_ms,
            calls=len(self.trace.calls),
            tokens_estimated=self.trace.estimated,
        )
        if self.trace.rationale:
            out["rationale"] = self.trace.rationale
        return out


@dataclass(frozen=True)
class MetricStat:
    metric_id: int
    passed: int
    failed: int
    indeterminate: int = 0

    @property
    def total(self) -> int:
        return self.passed + self.failed + self.indeterminate

    def pct(self, count: int) -> float:
        return round(100.0 * count / self.total, 3) if self.total else 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.metric_id,
            "name": METRIC_NAMES[self.metric_id],
            "passed": self.passed,
            "failed": self.failed,
            "indeterminate": self.indeterminate,
            "pass_pct": self.pct(self.passed),
            "fail_pct": self.pct(self.failed),
            "indeterminate_pct": self.pct(self.indeterminate),
        }


@dataclass(frozen=True)
class RunSummary:
    """Aggregates of one run. Wall-clock figures are kept apart from the rest
    because they vary between otherwise identical runs."""

    label: str
    strategy: dict[str, Any]
    dataset_id: str
    sample_count: int
    errored_count: int
    metrics: tuple[MetricStat, ...]
    exact_match_pct: float
    failure_categories: dict[str, int]
    mean_input_tokens: float
    mean_output_tokens: float
    mean_latency_ms: float
    judge_tokens: int = 0
    wall_time_s: float | None = None
    throughput_qps: float | None = None

    @property
    def mean_tokens(self) -> float:
        return round(self.mean_input_tokens + self.mean_output_tokens, 3)

    def metric(self, metric_id: int) -> MetricStat:
        return self.metrics[metric_id - 1]

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "strategy": self.strategy,
            "dataset_id": self.dataset_id,
            "sample_count": self.sample_count,
            "errored_count": self.errored_count,
            "metrics": [m.to_json() for m in self.metrics],
            "exact_match_pct": self.exact_match_pct,
            "failure_categories": dict(sorted(self.failure_categories.items())),
            "mean_input_tokens": self.mean_input_tokens,
            "mean_output_tokens": self.mean_output_tokens,
            "mean_tokens": self.mean_tokens,
            "mean_latency_ms": self.mean_latency_ms,
            "judge_tokens": self.judge_tokens,
        }

    def timing_json(self) -> dict[str, Any]:
        return {"wall_time_s": self.wall_time_s, "throughput_qps": self.throughput_qps}

    @classmethod
    def from_json(cls, data: dict[str, Any], timing: dict[str, Any] | None = None) -> RunSummary:
        timing = timing or {}
        return cls(
            label=data["label"],
            strategy=data["strategy"],
            dataset_id=data["dataset_id"],
            sample_count=data["sample_count"],
            errored_count=data["errored_count"],
            metrics=tuple(
                MetricStat(m["id"], m["passed"], m["failed"], m.get("indeterminate", 0)) for m in data["metrics"]
            ),
            exact_match_pct=data["exact_match_pct"],
            failure_categories=data["failure_categories"],
            mean_input_tokens=data["mean_input_tokens"],
            mean_output_tokens=data["mean_output_tokens"],
            mean_latency_ms=data["mean_latency_ms"],
            judge_tokens=data.get("judge_tokens", 0),
            wall_time_s=timing.get("wall_time_s"),
            throughput_qps=timing.get("throughput_qps"),
        )

    @classmethod
    def load(cls, path: str | Path) -> RunSummary:
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        timing_path = path.with_name("timing.json")
        timing = json.loads(timing_path.read_text(encoding="utf-8")) if timing_path.exists() else None
        return cls.from_json(data, timing)


def summarize(
    label: str,
    strategy: StrategyConfig,
    records: Sequence[QueryRecord],
    outcomes: Sequence[SampleOutcome],
    wall_time_s: float | None = None,
) -> RunSummary:
    """Reduce per-sample outcomes. Errored samples are left out of every denominator."""
    scored = sorted((o for o in outcomes if not o.errored), key=lambda o: o.record_id)
    n = len(scored)
    stats = []
    for metric_id in range(1, 12):
        values = [o.report.result(metric_id).passed for o in scored]
        stats.append(MetricStat(metric_id, values.count(True), values.count(False), values.count(None)))
    categories = Counter(o.report.failure_category.value for o in scored if o.report.failure_category)
    exact = sum(o.report.exact_match for o in scored)

    def mean(total: int) -> float:
        return round(total / n, 3) if n else 0.0

    return RunSummary(
        label=label,
        strategy=strategy.to_dict(),
        dataset_id=dataset_id(records),
        sample_count=len(outcomes),
        errored_count=len(outcomes) - n,
        metrics=tuple(stats),
        exact_match_pct=round(100.0 * exact / n, 3) if n else 0.0,
        failure_categories={c.value: categories.get(c.value, 0) for c in FailureCategory},
        mean_input_tokens=mean(sum(o.trace.total_input_tokens for o in scored)),
        mean_output_tokens=mean(sum(o.trace.total_output_tokens for o in scored)),
        mean_latency_ms=mean(sum(o.trace.total_latency_ms for o in scored)),
        judge_tokens=sum(o.judge_tokens for o in outcomes),
        wall_time_s=round(wall_time_s, 6) if wall_time_s is not None else None,
        throughput_qps=round(len(outcomes) / wall_time_s, 3) if wall_time_s else None,
    )


class _CountingBackend:
    """Wraps a judge backend to tally its token spend for one sample."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.tokens = 0

    def complete(self, call):
        result = self.inner.complete(call)
        self.tokens += result.input_tokens + result.output_tokens
        return result


def _evaluate_one(
    record: QueryRecord,
    runner: StrategyRunner,
    judge_backend: Backend | None,
    judge_model: str | None,
    cutoff: float,
    synonyms: SynonymTable,
) -> SampleOutcome:
    try:
        _, trace = runner(record.query, record.id)
    except PipelineError as exc:
        logger.warning("record %d errored: %s", record.id, exc)
        return SampleOutcome(record.id, None, exc.trace, f"{type(exc.cause).__name__}: {exc}")
    judge = None
    counter = None
    if judge_backend is not None:
        counter = _CountingBackend(judge_backend)
        judge = Judge(counter, judge_model or "judge")
    report = evaluate_sample(record, trace.final_text, judge, cutoff=cutoff, synonyms=synonyms)
    return SampleOutcome(record.id, report, trace, judge_tokens=counter.tokens if counter else 0)


def run_eval(
    dataset: Sequence[QueryRecord],
    strategy: StrategyConfig,
    backend: Backend,
    judge_backend: Backend | None = None,
    *,
    judge_model: str | None = None,
    concurrency: int = 4,
    cutoff: float = DEFAULT_CUTOFF,
    synonyms: SynonymTable | None = None,
    label: str | None = None,
    pool: Sequence[QueryRecord] | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> tuple[RunSummary, list[SampleOutcome]]:
    """Evaluate every record once with a bounded worker pool.

    Outcomes come back sorted by record id whatever order they finished in.
    Without ``judge_backend`` metric 11 is reported as indeterminate.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    if concurrency < 1:
        raise ValueError("concurrency must be a positive integer")
    ids = [r.id for r in dataset]
    if len(set(ids)) != len(ids):
        raise ValueError("dataset has duplicate record ids")
    synonyms = synonyms or SynonymTable.default()
    runner = StrategyRunner(strategy, backend, pool)

    started = clock()
    with ThreadPoolExecutor(max_workers=concurrency) as workers:
        outcomes = list(workers.map(
            lambda r: _evaluate_one(r, runner, judge_backend, judge_model, cutoff, synonyms), dataset
        ))
    wall = clock() - started
    outcomes.sort(key=lambda o: o.record_id)
    summary = summarize(label or strategy.kind.value, strategy, dataset, outcomes, wall)
    return summary, outcomes


# -- dataset vetting -----------------------------------------------------------

@dataclass(frozen=True)
class VetFinding:
    record_id: int
    verdict: JudgeVerdict
    flagged: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "flagged", self.verdict.outcome is not Verdict.CONSISTENT)

    def to_json(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "outcome": self.verdict.outcome.value,
            "flagged": self.flagged,
            "rationale": self.verdict.rationale,
        }


def vet_dataset(
    dataset: Sequence[QueryRecord],
    judge_backend: Backend,
    judge_model: str = "judge",
    *,
    concurrency: int = 4,
) -> list[VetFinding]:
    """Ask the judge whether each golden answer follows from its query.

    Findings are advisory; the dataset is never modified. Judge failures give
    an indeterminate (hence flagged) finding.
    """
    def vet(record: QueryRecord) -> VetFinding:
        try:
            verdict = judge_date_consistency(judge_backend, record.query, golden_output(record), judge_model)
        except GatewayError as exc:
            verdict = JudgeVerdict(Verdict.INDETERMINATE, f"judge call failed: {exc}")
        return VetFinding(record.id, verdict)

    with ThreadPoolExecutor(max_workers=concurrency) as workers:
        findings = list(workers.map(vet, dataset))
    return sorted(findings, key=lambda f: f.record_id)


# -- comparison -----------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    baseline: str
    rows: tuple[dict[str, Any], ...]

    def to_json(self) -> dict[str, Any]:
        return {"baseline": self.baseline, "rows": list(self.rows)}

    def to_markdown(self) -> str:
        header = ["run"] + [f"Δ m{i}" for i in range(1, 12)] + ["Δ exact", "tokens/sample", "token ratio", "throughput ratio"]
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for row in self.rows:
            cells = [row["label"]]
            cells += [f"{row['metric_deltas'][str(i)]:+.1f}" for i in range(1, 12)]
            cells.append(f"{row['exact_match_delta']:+.1f}")
            cells.append(f"{row['mean_tokens']:.1f}")
            cells.append(_ratio(row["token_ratio"]))
            cells.append(_ratio(row["throughput_ratio"]))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _ratio(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}x"


def compare_runs(summaries: Sequence[RunSummary], baseline: int | str | None = None) -> Comparison:
    """Per-metric deltas (percentage points) and cost ratios against a baseline run.

    ``baseline`` is an index or label; by default the chain-of-thought run when
    there is one, else the first summary.
    """
    if len(summaries) < 2:
        raise ValueError("need at least two summaries to compare")
    if len({s.dataset_id for s in summaries}) != 1:
        raise ValueError("summaries were computed on different datasets")
    if baseline is None:
        base = next((s for s in summaries if s.strategy.get("kind") == "cot"), summaries[0])
    elif isinstance(baseline, int):
        base = summaries[baseline]
    else:
        matches = [s for s in summaries if s.label == baseline]
        if not matches:
            raise ValueError(f"no summary labelled {baseline!r}")
        base = matches[0]

    rows = []
    for s in summaries:
        rows.append({
            "label": s.label,
            "metric_deltas": {
                str(i): round(s.metric(i).pct(s.metric(i).passed) - base.metric(i).pct(base.metric(i).passed), 3)
                for i in range(1, 12)
            },
            "exact_match_delta": round(s.exact_match_pct - base.exact_match_pct, 3),
            "mean_tokens": s.mean_tokens,
            "token_ratio": round(s.mean_tokens / base.mean_tokens, 3) if base.mean_tokens else None,
            "throughput_ratio": (
                round(s.throughput_qps / base.throughput_qps, 3)
                if s.throughput_qps and base.throughput_qps else None
            ),
        })
    return Comparison(base.label, tuple(rows))


# -- presentation and persistence ------------------------------------------------

def render_summary_table(summary: dict[str, Any]) -> str:
    """Markdown table built only from the ``summary.json`` payload."""
    lines = [
        f"## {summary['label']} ({summary['strategy']['kind']})",
        "",
        f"samples: {summary['sample_count']} (errored: {summary['errored_count']})",
        "",
        "| metric | name | pass % | fail % | indeterminate % |",
        "|---|---|---|---|---|",
    ]
    for m in summary["metrics"]:
        lines.append(f"| m{m['id']} | {m['name']} | {m['pass_pct']:.1f}% | {m['fail_pct']:.1f}% | {m['indeterminate_pct']:.1f}% |")
    cats = ", ".join(f"{k}={v}" for k, v in summary["failure_categories"].items())
    lines += [
        "",
        f"exact match: {summary['exact_match_pct']:.1f}%",
        f"date-failure categories: {cats}",
        f"tokens/sample: {summary['mean_tokens']:.1f} (in {summary['mean_input_tokens']:.1f}, out {summary['mean_output_tokens']:.1f})",
        f"latency/sample: {summary['mean_latency_ms']:.1f} ms",
    ]
    return "\n".join(lines) + "\n"


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_outputs(out_dir: str | Path, summary: RunSummary, outcomes: Sequence[SampleOutcome]) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = summary.to_json()
    paths = {
        "summary": out / "summary.json",
        "markdown": out / "summary.md",
        "csv": out / "summary.csv",
        "reports": out / "reports.jsonl",
        "timing": out / "timing.json",
    }
    paths["summary"].write_text(_dump(payload), encoding="utf-8")
    paths["markdown"].write_text(render_summary_table(payload), encoding="utf-8")
    paths["timing"].write_text(_dump(summary.timing_json()), encoding="utf-8")
    with open(paths["reports"], "w", encoding="utf-8") as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome.to_json(), ensure_ascii=False) + "\n")
    with open(paths["csv"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "metric_id", "name", "passed", "failed", "indeterminate", "pass_pct"])
        for m in payload["metrics"]:
            writer.writerow([payload["label"], m["id"], m["name"], m["passed"], m["failed"], m["indeterminate"], m["pass_pct"]])
    return paths


def write_findings(out_dir: str | Path, findings: Sequence[VetFinding]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "findings.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for finding in findings:
            fh.write(json.dumps(finding.to_json(), ensure_ascii=False) + "\n")
    return path
