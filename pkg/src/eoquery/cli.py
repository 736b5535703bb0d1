"""eoquery command line: extract, eval, vet-dataset, resolve-date, compare.

Exit codes: 0 ok, 1 transport failure, 2 unparseable model output,
3 unrecognised time expression, 4 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .dataset import DatasetError, load_dataset
from .gateway import GatewayError
from .harness import (
    RunSummary,
    compare_runs,
    render_summary_table,
    run_eval,
    vet_dataset,
    write_findings,
    write_outputs,
)
from .model import DateFormatError, augment_with_anchor, parse_iso_date
from .pipelines import PipelineError, StrategyConfig, StrategyKind, StrategyRunner
from .runconfig import BackendConfig, ConfigError, RunConfig, load_run_config
from .temporal import TemporalError, parse_temporal, resolve
from .textsim import SynonymTable

EXIT_OK = 0
EXIT_TRANSPORT = 1
EXIT_UNPARSEABLE = 2
EXIT_UNRECOGNIZED = 3
EXIT_CONFIG = 4

log = logging.getLogger("eoquery")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors here, so they exit 4 rather than 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _iso_date(text: str) -> dt.date:
    try:
        return parse_iso_date(text)
    except DateFormatError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="run config JSON")
    p.add_argument("--backend", choices=("http", "scripted"))
    p.add_argument("--endpoint", help="base URL of an OpenAI-compatible server")
    p.add_argument("--api-key-env", help="environment variable holding the API token")
    p.add_argument("--fixtures", type=Path, help="scripted backend fixture (JSONL)")
    p.add_argument("--strategy", choices=[k.value for k in StrategyKind])
    p.add_argument("--model-a")
    p.add_argument("--model-b")
    p.add_argument("--model-c")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eoquery", description="Extract and evaluate area/date/event parameters from queries.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="extract the answer JSON for one query")
    p.add_argument("--query", required=True)
    p.add_argument("--today", type=_iso_date, help="append a 'Today is ...' anchor to the query")
    _add_run_flags(p)

    for name, helptext in (("eval", "evaluate a strategy over a dataset"),
                           ("vet-dataset", "ask the judge to review golden answers")):
        p = sub.add_parser(name, help=helptext)
        _add_run_flags(p)
        p.add_argument("--concurrency", type=int)
        p.add_argument("--cutoff", type=float)
        p.add_argument("--out", type=Path, help="output directory")
        if name == "eval":
            p.add_argument("--no-judge", action="store_true", help="skip metric 11 (reported indeterminate)")

    p = sub.add_parser("resolve-date", help="resolve a time expression against an anchor date")
    p.add_argument("--expr", required=True)
    p.add_argument("--today", type=_iso_date, default=None, help="anchor date (default: system date)")

    p = sub.add_parser("compare", help="compare run summaries")
    p.add_argument("summaries", nargs="*", type=Path, help="summary.json files or run directories")
    p.add_argument("--baseline", type=Path, help="summary to use as the baseline")
    return parser


# -- config assembly -------------------------------------------------------------

def _strategy(base: StrategyConfig | None, args: argparse.Namespace) -> StrategyConfig:
    fields = base.to_dict() if base else {"kind": "ad_hoc", "model_a": "model-a"}
    if args.strategy:
        fields["kind"] = args.strategy
    for flag in ("model_a", "model_b", "model_c"):
        value = getattr(args, flag)
        if value:
            fields[flag] = value
    kind = fields["kind"]
    if kind in ("self_refine", "sgs"):
        fields["model_b"] = fields.get("model_b") or fields["model_a"]
    if kind == "sgs":
        fields["model_c"] = fields.get("model_c") or fields["model_a"]
    try:
        return StrategyConfig.from_dict(fields)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _backend(base: BackendConfig | None, args: argparse.Namespace) -> BackendConfig:
    cfg = base or BackendConfig(kind="http" if args.endpoint and not args.fixtures else "scripted")
    changes = {
        "kind": args.backend,
        "base_url": args.endpoint,
        "api_key_env": args.api_key_env,
        "fixtures": args.fixtures,
    }
    return dataclasses.replace(cfg, **{k: v for k, v in changes.items() if v is not None})


def _run_config(args: argparse.Namespace) -> RunConfig:
    if args.config is None:
        raise ConfigError(f"{args.command} needs --config")
    cfg = load_run_config(args.config)
    return dataclasses.replace(
        cfg.with_overrides(concurrency=args.concurrency, cutoff=args.cutoff, out=args.out),
        strategy=_strategy(cfg.strategy, args),
        backend=_backend(cfg.backend, args),
    )


def _dataset(cfg: RunConfig):
    if cfg.dataset is None:
        raise ConfigError("config has no dataset")
    try:
        return load_dataset(cfg.dataset)
    except FileNotFoundError:
        raise ConfigError(f"dataset not found: {cfg.dataset}") from None
    except DatasetError as exc:
        raise ConfigError(f"{cfg.dataset}: {exc}") from None


# -- commands --------------------------------------------------------------------

def cmd_extract(args: argparse.Namespace) -> int:
    base = load_run_config(args.config) if args.config else None
    strategy = _strategy(base.strategy if base else None, args)
    backend = _backend(base.backend if base else None, args).build()
    query = augment_with_anchor(args.query, args.today) if args.today else args.query
    try:
        answer, trace = StrategyRunner(strategy, backend)(query)
    except PipelineError as exc:
        print(f"error: backend call failed: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    print(
        f"calls={len(trace.calls)} input_tokens={trace.total_input_tokens} "
        f"output_tokens={trace.total_output_tokens} latency_ms={trace.total_latency_ms}",
        file=sys.stderr,
    )
    if answer is None:
        print("error: model output contains no JSON object", file=sys.stderr)
        print(trace.final_text, file=sys.stderr)
        return EXIT_UNPARSEABLE
    print(json.dumps(answer.to_json(), ensure_ascii=False))
    return EXIT_OK


def cmd_resolve_date(args: argparse.Namespace) -> int:
    anchor = args.today or dt.date.today()
    expr = parse_temporal(args.expr)
    if expr is None:
        print(f"error: no recognised time expression in {args.expr!r}", file=sys.stderr)
        return EXIT_UNRECOGNIZED
    try:
        window = resolve(expr, anchor)
    except TemporalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNRECOGNIZED
    out = {"category": expr.category.value, "anchor": anchor.isoformat(), **window.to_json()}
    print(json.dumps(out))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    records = _dataset(cfg)
    backend = cfg.backend.build()
    judge_backend = None
    if cfg.judge is not None and not args.no_judge:
        judge_backend = cfg.judge.build()
    synonyms = SynonymTable.load(cfg.synonyms) if cfg.synonyms else None
    try:
        summary, outcomes = run_eval(
            records,
            cfg.strategy,
            backend,
            judge_backend,
            judge_model=cfg.judge.model if cfg.judge else None,
            concurrency=cfg.concurrency,
            cutoff=cfg.cutoff,
            synonyms=synonyms,
            label=cfg.label,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    paths = write_outputs(cfg.out, summary, outcomes)
    sys.stdout.write(render_summary_table(summary.to_json()))
    print(f"wrote {paths['summary'].parent}", file=sys.stderr)
    if summary.errored_count == summary.sample_count:
        print("error: every sample failed at the backend", file=sys.stderr)
        return EXIT_TRANSPORT
    return EXIT_OK


def cmd_vet(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    if cfg.judge is None:
        raise ConfigError("vet-dataset needs a judge block in the config")
    records = _dataset(cfg)
    findings = vet_dataset(records, cfg.judge.build(), cfg.judge.model or "judge", concurrency=cfg.concurrency)
    path = write_findings(cfg.out, findings)
    flagged = [f for f in findings if f.flagged]
    for f in flagged:
        print(json.dumps(f.to_json(), ensure_ascii=False))
    print(f"{len(flagged)} of {len(findings)} records flagged; wrote {path}", file=sys.stderr)
    return EXIT_OK


def _summary_path(p: Path) -> Path:
    return p / "summary.json" if p.is_dir() else p


def cmd_compare(args: argparse.Namespace) -> int:
    paths = [_summary_path(p) for p in args.summaries]
    baseline = None
    if args.baseline is not None:
        base_path = _summary_path(args.baseline)
        if base_path not in paths:
            paths.insert(0, base_path)
        baseline = paths.index(base_path)
    if len(paths) < 2:
        raise ConfigError("compare needs at least two summaries")
    try:
        summaries = [RunSummary.load(p) for p in paths]
        table = compare_runs(summaries, baseline)
    except FileNotFoundError as exc:
        raise ConfigError(f"summary not found: {exc.filename}") from None
    except (KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"not a run summary: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sys.stdout.write(table.to_markdown())
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "eval": cmd_eval,
    "vet-dataset": cmd_vet,
    "resolve-date": cmd_resolve_date,
    "compare": cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
