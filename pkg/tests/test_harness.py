import csv
import json

import pytest

from conftest import write_jsonl
from eoquery.gateway import ScriptedBackend, ScriptedReply, TransportError, Verdict
from eoquery.harness import (
    RunSummary,
    compare_runs,
    render_summary_table,
    run_eval,
    vet_dataset,
    write_findings,
    write_outputs,
)
from eoquery.metrics import golden_output
from eoquery.model import DateValue, EventType, GoldenAnswer, QueryRecord
from eoquery.pipelines import StrategyConfig
from eoquery.runconfig import BackendConfig, ConfigError, load_run_config, parse_run_config


def echo_backend(records, tokens=(100, 20)):
    return ScriptedBackend([
        ScriptedReply(None, f"Query: {r.query}", golden_output(r), *tokens) for r in records
    ])


def cot():
    return StrategyConfig("cot", "m")


class TestRunEval:
    def test_golden_echo_scores_full_marks(self, appendix_records):
        summary, outcomes = run_eval(appendix_records, cot(), echo_backend(appendix_records))
        for i in range(1, 11):
            assert summary.metric(i).pct(summary.metric(i).passed) == 100.0, i
        assert summary.metric(11).indeterminate == len(appendix_records)
        assert summary.exact_match_pct == 100.0
        assert sum(summary.failure_categories.values()) == 0
        assert [o.record_id for o in outcomes] == sorted(r.id for r in appendix_records)

    def test_concurrency_does_not_change_summary(self, appendix_records):
        backend = echo_backend(appendix_records)
        one, _ = run_eval(appendix_records, cot(), backend, concurrency=1)
        eight, _ = run_eval(appendix_records, cot(), backend, concurrency=8)
        assert one.to_json() == eight.to_json()

    def test_errored_samples_left_out_of_denominators(self, appendix_records):
        backend = echo_backend(appendix_records[2:])
        summary, outcomes = run_eval(appendix_records, cot(), backend)
        assert summary.errored_count == 2 and summary.sample_count == len(appendix_records)
        assert [o.errored for o in outcomes[:2]] == [True, True]
        assert "FixtureMissError" in outcomes[0].error
        for stat in summary.metrics:
            assert stat.total == len(appendix_records) - 2
        assert summary.mean_input_tokens == 100.0

    def test_denominator_law(self, appendix_records, appendix_dir):
        backend = ScriptedBackend.from_file(appendix_dir / "fixtures.jsonl")
        summary, _ = run_eval(appendix_records, cot(), backend)
        for stat in summary.metrics:
            assert stat.passed + stat.failed + stat.indeterminate == summary.sample_count - summary.errored_count
        failed_m10 = summary.metric(10).failed
        assert sum(summary.failure_categories.values()) == failed_m10

    def test_judge_tokens_kept_apart(self, appendix_records):
        judge = ScriptedBackend([ScriptedReply("judge", "Query:", "Consistent.", 50, 5)])
        summary, outcomes = run_eval(appendix_records, cot(), echo_backend(appendix_records), judge,
                                     judge_model="judge")
        assert summary.judge_tokens == 55 * len(appendix_records)
        assert summary.mean_tokens == 120.0
        assert summary.metric(11).passed == len(appendix_records)
        assert all(o.judge_tokens == 55 for o in outcomes)

    def test_rejects_bad_input(self, appendix_records):
        with pytest.raises(ValueError, match="empty"):
            run_eval([], cot(), echo_backend([]))
        with pytest.raises(ValueError, match="concurrency"):
            run_eval(appendix_records, cot(), echo_backend(appendix_records), concurrency=0)
        with pytest.raises(ValueError, match="duplicate"):
            run_eval(appendix_records[:1] * 2, cot(), echo_backend(appendix_records))

    def test_throughput_from_clock(self, appendix_records):
        ticks = iter([10.0, 12.0])
        summary, _ = run_eval(appendix_records, cot(), echo_backend(appendix_records), clock=lambda: next(ticks))
        assert summary.wall_time_s == 2.0
        assert summary.throughput_qps == len(appendix_records) / 2


def houston(golden_date):
    query = "Provide the latest imagery of flooding in Houston, Texas, from this past Tuesday. Today is June 4, 2024."
    return QueryRecord(60, query, GoldenAnswer("Houston, Texas", DateValue.from_json(golden_date), EventType.FLOOD))


class TestVet:
    def judge_for(self, reply):
        return ScriptedBackend([ScriptedReply("judge", "Query:", reply)])

    def test_wrong_weekday_golden_flagged(self):
        [finding] = vet_dataset([houston("2024-06-02")], self.judge_for("Inconsistent: June 2, 2024 is a Sunday."))
        assert finding.flagged and finding.verdict.outcome is Verdict.INCONSISTENT

    def test_consistent_golden_not_flagged(self):
        [finding] = vet_dataset([houston("2024-05-28")], self.judge_for("consistent."))
        assert not finding.flagged

    def test_unparseable_reply_flagged_as_indeterminate(self):
        [finding] = vet_dataset([houston("2024-05-28")], self.judge_for("I would need more context."))
        assert finding.verdict.outcome is Verdict.INDETERMINATE and finding.flagged

    def test_judge_failure_is_indeterminate(self):
        class Down:
            def complete(self, call):
                raise TransportError("refused")

        [finding] = vet_dataset([houston("2024-05-28")], Down())
        assert finding.flagged and "refused" in finding.verdict.rationale

    def test_prompt_carries_golden(self):
        seen = []

        class Spy:
            def complete(self, call):
                seen.append(call.user_message)
                return ScriptedBackend([ScriptedReply(None, "", "consistent")]).complete(call)

        record = houston("2024-05-28")
        vet_dataset([record], Spy())
        assert seen == [f"Query: {record.query}\nAnswer: {golden_output(record)}"]

    def test_findings_file(self, tmp_path, appendix_records):
        findings = vet_dataset(appendix_records, self.judge_for("consistent"))
        path = write_findings(tmp_path, findings)
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(rows) == len(appendix_records)
        assert set(rows[0]) == {"record_id", "outcome", "flagged", "rationale"}


class TestCompare:
    def per_call(self, records):
        return echo_backend(records, tokens=(100, 20))

    def test_sgs_costs_three_times_cot(self, appendix_records):
        backend = ScriptedBackend([ScriptedReply(None, "Query:", '{"area": "x"}', 100, 20)])
        base, _ = run_eval(appendix_records, cot(), backend, label="cot")
        sgs, _ = run_eval(appendix_records, StrategyConfig("sgs", "m", "m", "m"), backend, label="sgs")
        comparison = compare_runs([sgs, base])
        assert comparison.baseline == "cot"
        assert comparison.rows[0]["token_ratio"] == 3.0
        assert comparison.rows[1]["token_ratio"] == 1.0

    def test_identical_runs_have_zero_deltas(self, appendix_records):
        summary, _ = run_eval(appendix_records, cot(), self.per_call(appendix_records))
        comparison = compare_runs([summary, summary])
        for row in comparison.rows:
            assert set(row["metric_deltas"].values()) == {0.0}
            assert row["exact_match_delta"] == 0.0
        assert "+0.0" in comparison.to_markdown()

    def test_explicit_baseline(self, appendix_records):
        summary, _ = run_eval(appendix_records, cot(), self.per_call(appendix_records), label="a")
        other = RunSummary.from_json({**summary.to_json(), "label": "b"})
        assert compare_runs([summary, other], baseline="b").baseline == "b"
        assert compare_runs([summary, other], baseline=1).baseline == "b"
        with pytest.raises(ValueError, match="labelled"):
            compare_runs([summary, other], baseline="zzz")

    def test_rejects_mismatched_datasets(self, appendix_records):
        a, _ = run_eval(appendix_records, cot(), self.per_call(appendix_records))
        b, _ = run_eval(appendix_records[:5], cot(), self.per_call(appendix_records))
        with pytest.raises(ValueError, match="different datasets"):
            compare_runs([a, b])
        with pytest.raises(ValueError, match="two"):
            compare_runs([a])


class TestOutputs:
    def test_files_and_round_trip(self, tmp_path, appendix_records):
        summary, outcomes = run_eval(appendix_records, cot(), echo_backend(appendix_records))
        paths = write_outputs(tmp_path, summary, outcomes)
        assert {p.name for p in tmp_path.iterdir()} == {
            "summary.json", "summary.md", "summary.csv", "reports.jsonl", "timing.json"}
        loaded = RunSummary.load(paths["summary"])
        assert loaded == summary
        assert "wall_time_s" not in json.loads(paths["summary"].read_text())
        rows = list(csv.DictReader(paths["csv"].open()))
        assert len(rows) == 11 and rows[9]["name"] == "date_equivalent"
        reports = [json.loads(line) for line in paths["reports"].read_text().splitlines()]
        assert reports[0]["input_tokens"] == 100 and reports[0]["calls"] == 1

    def test_table_is_function_of_summary_json(self, tmp_path, appendix_records):
        summary, outcomes = run_eval(appendix_records, cot(), echo_backend(appendix_records))
        paths = write_outputs(tmp_path, summary, outcomes)
        payload = json.loads(paths["summary"].read_text())
        table = render_summary_table(payload)
        assert table == paths["markdown"].read_text()
        assert "| m10 | date_equivalent | 100.0% |" in table


class TestRunConfig:
    def test_bundled_config(self, appendix_dir):
        cfg = load_run_config(appendix_dir / "run.json")
        assert cfg.dataset == appendix_dir / "dataset.jsonl"
        assert cfg.backend.fixtures == appendix_dir / "fixtures.jsonl"
        assert cfg.judge.model == "judge"
        assert cfg.strategy.kind.value == "cot"
        assert cfg.out.as_posix() == "runs/appendix-replay"

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown"):
            parse_run_config({"dataset": "d", "strategy": {"kind": "cot", "model_a": "m"},
                              "backend": {"kind": "scripted", "fixtures": "f"}, "beam": 2}, tmp_path)

    def test_missing_fixtures_caught_at_build(self, tmp_path):
        cfg = parse_run_config({"dataset": "d", "strategy": {"kind": "cot", "model_a": "m"},
                                "backend": {"kind": "scripted"}}, tmp_path)
        with pytest.raises(ConfigError, match="fixtures"):
            cfg.backend.build()
        with pytest.raises(ConfigError, match="not found"):
            cfg.with_overrides(backend=BackendConfig(fixtures=tmp_path / "nope.jsonl")).backend.build()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "nope.json")

    def test_overrides(self, tmp_path, appendix_records):
        dataset = write_jsonl(tmp_path / "d.jsonl", [r.to_json() for r in appendix_records[:1]])
        cfg = parse_run_config({"dataset": dataset.name, "strategy": {"kind": "cot", "model_a": "m"},
                                "backend": {"kind": "scripted", "fixtures": "f.jsonl"}}, tmp_path)
        assert cfg.with_overrides(concurrency=2, cutoff=None).concurrency == 2
        with pytest.raises(ConfigError):
            cfg.with_overrides(concurrency=0)
