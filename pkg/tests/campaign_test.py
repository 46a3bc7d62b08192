import json
import random
import time
from itertools import pairwise
from pathlib import Path
from typing import Any

import pytest
from pytest import param as test_data  # noqa: PT013

from src.core.enums import SEGV, CampaignStatus, SeedOrigin
from src.core.errors import ConfigError
from src.fuzzing.adapters.scripted import ScriptedFuzzerAdapter
from src.fuzzing.campaign import SEEDS_DIR, dump_result, load_batch_file, run_batch, run_campaign
from src.fuzzing.models import CampaignConfig, ExecutionMode, TerminationCriteria
from src.seedgen.corpus_io import write_corpus
from src.seedgen.models import Seed, SeedCorpus
from tests.utils.toy_target import TOY_APPLET, TOY_ARGV, VARIANT_A, toy_harness, toy_plan, toy_target

POLL_INTERVAL_S = 1


def seed_corpus() -> SeedCorpus:
    return SeedCorpus([Seed(b"BEGIN { print 1 }", SeedOrigin.LLM, "seed-000"),
                       Seed(b"{ print $1 }", SeedOrigin.LLM, "seed-001")], TOY_APPLET)


def campaign(output_dir: Path, criteria: TerminationCriteria | None = None,
             campaign_id: str | None = None) -> CampaignConfig:
    return CampaignConfig(
        target=toy_target(),
        applet=TOY_APPLET,
        harness=toy_harness(),
        corpus=seed_corpus(),
        criteria=criteria or TerminationCriteria(max_runtime_s=10, max_crashes=5, max_cycles=3),
        output_dir=output_dir,
        poll_interval_s=POLL_INTERVAL_S,
        campaign_id=campaign_id,
        plan=toy_plan(),
    )


def run_scripted(config: CampaignConfig, script: dict[str, Any]) -> tuple[Any, ScriptedFuzzerAdapter]:
    adapter = ScriptedFuzzerAdapter({"*": script})
    return run_campaign(config, adapter), adapter


def is_monotone(series: tuple) -> bool:
    return all(not later.regressions_from(earlier) for earlier, later in pairwise(series))


@pytest.mark.unit
def test_max_crashes_stops_at_first_sample_reaching_the_bound(tmp_path: Path):
    # Arrange: the fuzzer reports one more crash per poll
    script = {"samples": [{"saved_crashes": crashes} for crashes in range(20)]}
    # Act: perform method under test
    result, adapter = run_scripted(campaign(tmp_path / "c1", TerminationCriteria(max_crashes=5)), script)
    # Assert: six samples (0..5) and no poll after the triggering one
    assert result.status is CampaignStatus.COMPLETED
    assert [sample.crashes_saved for sample in result.stats_series] == [0, 1, 2, 3, 4, 5]
    assert result.stop_reason == "max_crashes=5"
    assert adapter.processes["c1"].ticks == 6
    assert adapter.processes["c1"].terminate_requests == 1


@pytest.mark.unit
@pytest.mark.parametrize(
    ("samples", "criteria", "expected_reason", "expected_ticks"),
    [
        test_data([{"saved_crashes": 0}], TerminationCriteria(max_runtime_s=10), "max_runtime_s=10", 10,
                  id="max-runtime"),
        test_data([{"saved_crashes": crashes // 2} for crashes in range(30)], TerminationCriteria(max_crashes=5),
                  "max_crashes=5", 11, id="max-crashes"),
        test_data([{"cycles_done": cycles // 2} for cycles in range(30)], TerminationCriteria(max_cycles=3),
                  "max_cycles=3", 7, id="max-cycles"),
    ],
)
def test_each_criterion_terminates_within_one_poll_interval(tmp_path: Path, samples: list, criteria,
                                                           expected_reason: str, expected_ticks: int):
    # Act: perform method under test
    result, adapter = run_scripted(campaign(tmp_path / "c1", criteria), {"samples": samples})
    # Assert: the supervisor stopped on the poll that read the triggering sample
    process = adapter.processes["c1"]
    assert result.status is CampaignStatus.COMPLETED
    assert result.stop_reason == expected_reason
    assert process.ticks == expected_ticks
    assert result.final_sample.relative_time_s == expected_ticks * POLL_INTERVAL_S
    assert not process.killed


@pytest.mark.unit
def test_max_runtime_ends_with_a_sample_at_or_after_the_bound(tmp_path: Path):
    # Act: perform method under test
    result, _ = run_scripted(campaign(tmp_path / "c1", TerminationCriteria(max_runtime_s=10)),
                             {"samples": [{"execs_done": 100}]})
    # Assert: check the last sample
    assert result.final_sample.relative_time_s >= 10


@pytest.mark.unit
def test_scripted_campaigns_keep_monotone_series_and_finish_quickly(tmp_path: Path):
    # Arrange: 100 random scripts whose counters only grow
    rng = random.Random(2024)
    started = time.monotonic()
    for index in range(100):
        totals = {"saved_crashes": 0, "edges_found": rng.randint(1, 50), "execs_done": 0, "cycles_done": 0}
        samples = []
        for _ in range(rng.randint(1, 40)):
            for key in totals:
                totals[key] += rng.choice((0, 0, 1, 2, 7))
            samples.append(dict(totals))
        criteria = TerminationCriteria(max_runtime_s=rng.randint(1, 60), max_crashes=rng.randint(1, 80),
                                       max_cycles=rng.randint(1, 80))
        # Act: perform method under test
        result, _ = run_scripted(campaign(tmp_path / f"c{index}", criteria), {"samples": samples})
        # Assert: check the status and the series
        assert result.status is CampaignStatus.COMPLETED
        assert is_monotone(result.stats_series)
        assert len(set(result.stats_series)) == len(result.stats_series)
    assert time.monotonic() - started < 60


@pytest.mark.unit
def test_decreasing_counter_is_catastrophic(tmp_path: Path):
    # Arrange: the crash count goes down on the third sample
    script = {"samples": [{"saved_crashes": 1}, {"saved_crashes": 2}, {"saved_crashes": 1}]}
    # Act: perform method under test
    result, adapter = run_scripted(campaign(tmp_path / "c1"), script)
    # Assert: check the status, the diagnostic and the kept series
    assert result.status is CampaignStatus.CATASTROPHIC
    assert "crashes_saved" in result.failure_diagnostic
    assert len(result.stats_series) == 2
    assert adapter.processes["c1"].returncode is not None


@pytest.mark.unit
def test_unparsable_stats_for_three_polls_is_catastrophic(tmp_path: Path):
    # Act: perform method under test
    result, adapter = run_scripted(campaign(tmp_path / "c1"), {"samples": ["fuzzer stats are being rewritten"]})
    # Assert: check the status and when it was decided
    assert result.status is CampaignStatus.CATASTROPHIC
    assert "3 polls in a row" in result.failure_diagnostic
    assert adapter.processes["c1"].ticks == 3


@pytest.mark.unit
def test_one_unparsable_poll_is_tolerated(tmp_path: Path):
    # Arrange: a torn write between two good samples
    script = {"samples": [{"saved_crashes": 0}, "run_time : ", {"saved_crashes": 1}, {"saved_crashes": 5}]}
    # Act: perform method under test
    result, _ = run_scripted(campaign(tmp_path / "c1", TerminationCriteria(max_crashes=5)), script)
    # Assert: check the status and the series
    assert result.status is CampaignStatus.COMPLETED
    assert [sample.crashes_saved for sample in result.stats_series] == [0, 1, 5]


@pytest.mark.unit
@pytest.mark.parametrize(
    ("script", "expected_status", "expected_diagnostic"),
    [
        test_data({"exit": {"after": 0, "status": 1}}, CampaignStatus.FAILED, "exited early with status 1",
                  id="dies-immediately"),
        test_data({"samples": [{"saved_crashes": 0}], "exit": {"after": 2, "signal": 11}},
                  CampaignStatus.CATASTROPHIC, "killed by signal 11", id="fuzzer-crashes"),
        test_data({"spawn_error": "No such file or directory: 'afl-fuzz'"}, CampaignStatus.FAILED,
                  "Cannot spawn fuzzer", id="spawn-failure"),
        test_data({"exit": {"after": 2, "status": 0}}, CampaignStatus.FAILED, "without writing statistics",
                  id="clean-exit-without-stats"),
    ],
)
def test_fuzzer_failures(tmp_path: Path, script: dict, expected_status: CampaignStatus, expected_diagnostic: str):
    # Act: perform method under test
    result, _ = run_scripted(campaign(tmp_path / "c1"), script)
    # Assert: check the status and the diagnostic
    assert result.status is expected_status
    assert expected_diagnostic in result.failure_diagnostic


@pytest.mark.unit
def test_fuzzer_finishing_on_its_own_completes_the_campaign(tmp_path: Path):
    # Arrange: the fuzzer writes two samples and exits cleanly
    script = {"samples": [{"saved_crashes": 0}, {"saved_crashes": 1}], "exit": {"after": 2, "status": 0}}
    # Act: perform method under test
    result, _ = run_scripted(campaign(tmp_path / "c1"), script)
    # Assert: check the status and the stop reason
    assert result.status is CampaignStatus.COMPLETED
    assert result.stop_reason == "fuzzer exited"
    assert len(result.stats_series) == 2


@pytest.mark.unit
def test_fuzzer_ignoring_termination_is_killed(tmp_path: Path):
    # Act: perform method under test
    result, adapter = run_scripted(campaign(tmp_path / "c1", TerminationCriteria(max_crashes=1)),
                                   {"samples": [{"saved_crashes": 1}], "ignore_terminate": True})
    # Assert: check that the process was killed after the grace period
    assert result.status is CampaignStatus.COMPLETED
    assert adapter.processes["c1"].killed


@pytest.mark.unit
def test_crashes_queue_and_corpus_are_collected(tmp_path: Path):
    # Arrange: a fuzzer that saved two crashing inputs and grew its queue
    script = {
        "samples": [{"saved_crashes": 2}],
        "crashes": [{"name": "id:000000,sig:11,src:000000", "text": "BOOM"},
                    {"name": "id:000001,src:000001", "base64": "KCgoKA=="}],
        "queue_size": 3,
    }
    # Act: perform method under test
    result, _ = run_scripted(campaign(tmp_path / "c1", TerminationCriteria(max_crashes=2)), script)
    # Assert: check the harvested crashes, the queue and the materialized corpus
    assert result.crash_inputs == (b"BOOM", b"((((")
    assert result.crash_signals == (SEGV, None)
    assert result.queue_size == 3
    assert result.applet == TOY_APPLET
    assert result.seed_origin == "llm"
    assert result.target_hash == toy_target().content_hash
    assert sorted(path.name for path in (tmp_path / "c1" / SEEDS_DIR).iterdir()) == [
        "corpus.meta.json", "seed-000", "seed-001"]


@pytest.mark.unit
def test_unknown_arch_target_without_plan_fails_in_batch_without_stopping_others(tmp_path: Path):
    # Arrange: one campaign that cannot be planned next to a good one
    good = campaign(tmp_path / "good", TerminationCriteria(max_crashes=1))
    unplannable = campaign(tmp_path / "unplannable", TerminationCriteria(max_crashes=1))
    unplannable.plan = None
    adapter = ScriptedFuzzerAdapter({"*": {"samples": [{"saved_crashes": 1}]}})
    # Act: perform method under test
    results = run_batch([unplannable, good], adapter)
    # Assert: check both results in input order
    assert [result.status for result in results] == [CampaignStatus.FAILED, CampaignStatus.COMPLETED]
    assert "architecture" in results[0].failure_diagnostic


@pytest.mark.unit
@pytest.mark.parametrize("parallelism", [test_data(1, id="sequential"), test_data(3, id="parallel")])
def test_batch_isolates_failures_and_dumps_every_result(tmp_path: Path, parallelism: int):
    # Arrange: three campaigns, one of which cannot spawn its fuzzer
    configs = [campaign(tmp_path / name, TerminationCriteria(max_crashes=2)) for name in ("c1", "broken", "c3")]
    adapter = ScriptedFuzzerAdapter({
        "*": {"samples": [{"saved_crashes": 0}, {"saved_crashes": 2}]},
        "broken": {"spawn_error": "permission denied"},
    })
    dump_dir = tmp_path / "dumps"
    # Act: perform method under test
    results = run_batch(configs, adapter, parallelism=parallelism, dump_dir=dump_dir)
    # Assert: check the statuses and the shared dump directory
    assert [result.campaign_id for result in results] == ["c1", "broken", "c3"]
    assert [result.status for result in results] == [
        CampaignStatus.COMPLETED, CampaignStatus.FAILED, CampaignStatus.COMPLETED]
    assert sorted(path.name for path in dump_dir.iterdir()) == [
        "broken.stats.json", "c1.stats.json", "c3.stats.json"]
    document = json.loads((dump_dir / "c1.stats.json").read_text())
    assert document["status"] == "COMPLETED"
    assert document["final_stats"]["crashes_saved"] == 2
    assert [sample["crashes_saved"] for sample in document["series"]] == [0, 2]
    assert json.loads((dump_dir / "broken.stats.json").read_text())["failure_diagnostic"].startswith(
        "Cannot spawn fuzzer")


@pytest.mark.unit
def test_batch_with_shared_output_dir_raises_before_any_spawn(tmp_path: Path):
    # Arrange: two campaigns writing into the same directory
    configs = [campaign(tmp_path / "same", campaign_id="a"), campaign(tmp_path / "same", campaign_id="b")]
    adapter = ScriptedFuzzerAdapter({"*": {"samples": [{"saved_crashes": 5}]}})
    # Act & Assert: check the raised error and that nothing was started
    with pytest.raises(ConfigError, match="share output directory"):
        run_batch(configs, adapter)
    assert adapter.processes == {}


@pytest.mark.unit
def test_batch_rejects_duplicate_ids_and_zero_parallelism(tmp_path: Path):
    # Arrange: setup campaigns
    adapter = ScriptedFuzzerAdapter({"*": {"samples": [{"saved_crashes": 5}]}})
    duplicates = [campaign(tmp_path / "a", campaign_id="x"), campaign(tmp_path / "b", campaign_id="x")]
    # Act & Assert: check the raised errors
    with pytest.raises(ConfigError, match="Duplicate campaign id"):
        run_batch(duplicates, adapter)
    with pytest.raises(ConfigError, match="Parallelism"):
        run_batch([campaign(tmp_path / "c")], adapter, parallelism=0)


@pytest.mark.unit
def test_dump_result_writes_one_document_per_campaign(tmp_path: Path):
    # Arrange: a finished campaign
    result, _ = run_scripted(campaign(tmp_path / "c1", TerminationCriteria(max_crashes=1)),
                             {"samples": [{"saved_crashes": 1, "edges_found": 12}]})
    # Act: perform method under test
    dump_path = dump_result(result, tmp_path / "dumps")
    # Assert: check the document
    document = json.loads(dump_path.read_text())
    assert dump_path.name == "c1.stats.json"
    assert document["campaign_id"] == "c1"
    assert document["samples"] == 1
    assert document["final_stats"]["edges_found"] == 12


@pytest.mark.unit
def test_load_batch_file_resolves_paths_next_to_the_file(tmp_path: Path):
    # Arrange: a corpus on disk and a batch file describing one campaign
    write_corpus(seed_corpus(), tmp_path / "corpora" / "toy-llm")
    batch = {"campaigns": [{
        "campaign_id": "toy-llm-01",
        "target": str(VARIANT_A),
        "applet": TOY_APPLET,
        "corpus_dir": "corpora/toy-llm",
        "output_dir": "runs/toy-llm-01",
        "criteria": {"max_runtime_s": 30, "max_crashes": 5},
        "harness": {"argv_template": TOY_ARGV, "timeout_ms": 500},
        "poll_interval_s": 2,
        "plan": "native",
    }]}
    batch_path = tmp_path / "batch.json"
    batch_path.write_text(json.dumps(batch))
    # Act: perform method under test
    [config] = load_batch_file(batch_path)
    # Assert: check the loaded campaign
    assert config.id == "toy-llm-01"
    assert config.output_dir == tmp_path / "runs" / "toy-llm-01"
    assert config.criteria == TerminationCriteria(max_runtime_s=30, max_crashes=5)
    assert config.harness.timeout_ms == 500
    assert config.poll_interval_s == 2
    assert config.plan.mode is ExecutionMode.NATIVE
    assert len(config.corpus) == 2
    assert config.target.content_hash == toy_target().content_hash


@pytest.mark.unit
@pytest.mark.parametrize(
    ("batch_text", "expected_message"),
    [
        test_data("{not json", "Cannot load batch file", id="invalid-json"),
        test_data('{"campaigns": []}', "no 'campaigns' list", id="empty-list"),
        test_data('{"campaigns": [{"applet": "awk"}]}', "missing", id="missing-key"),
    ],
)
def test_bad_batch_file_raises_config_error(tmp_path: Path, batch_text: str, expected_message: str):
    # Arrange: write the batch file
    batch_path = tmp_path / "batch.json"
    batch_path.write_text(batch_text)
    # Act & Assert: check the raised error
    with pytest.raises(ConfigError, match=expected_message):
        load_batch_file(batch_path)
