import sys
import time
from pathlib import Path
from unittest.mock import patch

import pytest
from pytest import param as test_data  # noqa: PT013

from src.core.enums import ABRT, SEGV, Arch, Discovery
from src.core.errors import InputError, ToolEnvironmentError, ValidationError
from src.crashdb.models import CrashFilter, CrashMetadata, CrashSignature
from src.crashdb.store import CrashStore
from src.fuzzing.models import ExecutionMode, ExecutionPlan, HarnessSpec
from src.inventory.fingerprint import short_digest
from src.reuse.models import ReplayOutcome, ReplaySummary, Verdict
from src.reuse.screening import (
    compare_with_fuzzing,
    cross_validate,
    replay_one,
    replay_set,
    screen_target,
    signatures_from_document,
)
from src.triage.batch import triage_batch
from tests.utils.toy_target import (
    BOOM_INPUTS,
    FREE_INPUTS,
    TOY_APPLET,
    VARIANT_A,
    VARIANT_B,
    replay_debugger,
    stored_crash_inputs,
    toy_harness,
    toy_plan,
    toy_target,
)

FUZZING_RECORDS = CrashFilter(applet=TOY_APPLET, discovery=Discovery.FUZZING)


def signature(name: str) -> CrashSignature:
    return CrashSignature(SEGV, short_digest(name.encode(), 16), top_frame=name)


def signature_sets(reuse_count: int, fuzz_count: int, common_count: int) -> tuple[set, set]:
    common = {signature(f"common-{index}") for index in range(common_count)}
    reuse = common | {signature(f"reuse-{index}") for index in range(reuse_count - common_count)}
    fuzz = common | {signature(f"fuzz-{index}") for index in range(fuzz_count - common_count)}
    return reuse, fuzz


@pytest.fixture
def store_of_variant_a(tmp_path: Path) -> CrashStore:
    """A store holding the twelve crashing inputs of variant A as fuzzing finds."""
    store = CrashStore(tmp_path / "crashdb")
    target = toy_target(VARIANT_A)
    for input_bytes in stored_crash_inputs():
        crash_signal = ABRT if b"FREE2" in input_bytes else SEGV
        store.insert(input_bytes, CrashMetadata.for_target(target, TOY_APPLET, Discovery.FUZZING, crash_signal))
    return store


@pytest.mark.unit
def test_screening_variant_b_reproduces_only_the_shared_bug(store_of_variant_a: CrashStore):
    # Arrange: variant B fixes two of the three bugs of variant A
    target = toy_target(VARIANT_B)
    started = time.monotonic()
    # Act: screen five times, writing crashes back each time
    summaries = [
        screen_target(target, store_of_variant_a, FUZZING_RECORDS, toy_harness(), replay_debugger(), parallelism=4,
                      plan=toy_plan())
        for _ in range(5)
    ]
    # Assert: only the null dereference crashes, with one signature, the same way every time
    first = summaries[0]
    assert first.total_replayed == 12
    assert first.crashing == len(BOOM_INPUTS)
    assert first.unique_crashing == 1
    assert first.clean == 8
    assert first.timeouts == first.exec_errors == first.triage_failures == 0
    verdicts = [(outcome.record_id, outcome.verdict, outcome.signal) for outcome in first.per_outcome]
    for summary in summaries[1:]:
        assert [(outcome.record_id, outcome.verdict, outcome.signal) for outcome in summary.per_outcome] == verdicts
        assert set(summary.signatures) == set(first.signatures)
    assert time.monotonic() - started < 60


@pytest.mark.unit
def test_screening_writes_crashes_back_once_as_reuse_records(store_of_variant_a: CrashStore):
    # Arrange: the variant under screening
    target = toy_target(VARIANT_B)
    # Act: screen twice
    for _ in range(2):
        screen_target(target, store_of_variant_a, FUZZING_RECORDS, toy_harness(), replay_debugger(), plan=toy_plan())
    # Assert: four signed reuse records of variant B, none duplicated
    reuse_records = store_of_variant_a.query(CrashFilter(discovery=Discovery.REUSE))
    assert len(reuse_records) == len(BOOM_INPUTS)
    assert {record.source_target_hash for record in reuse_records} == {target.content_hash}
    assert {record.component for record in reuse_records} == {"toy"}
    assert all(record.signature is not None for record in reuse_records)
    assert len(store_of_variant_a) == 12 + len(BOOM_INPUTS)


@pytest.mark.unit
def test_repeated_screening_of_every_discovery_gives_the_same_summary(store_of_variant_a: CrashStore):
    # Arrange: a filter that also matches the reuse records written back by each screening
    target = toy_target(VARIANT_B)
    crash_filter = CrashFilter(applet=TOY_APPLET)
    # Act: screen five times with write-back
    summaries = [
        screen_target(target, store_of_variant_a, crash_filter, toy_harness(), replay_debugger(), parallelism=4,
                      plan=toy_plan())
        for _ in range(5)
    ]
    # Assert: the written-back records are never replayed, so every run sees the same twelve inputs
    expected = [(outcome.record_id, outcome.verdict, outcome.signal) for outcome in summaries[0].per_outcome]
    for summary in summaries:
        assert (summary.total_replayed, summary.crashing, summary.unique_crashing) == (12, len(BOOM_INPUTS), 1)
        assert [(outcome.record_id, outcome.verdict, outcome.signal) for outcome in summary.per_outcome] == expected
    assert len(store_of_variant_a) == 12 + len(BOOM_INPUTS)


@pytest.mark.unit
def test_replay_set_keeps_reuse_records_of_other_targets(store_of_variant_a: CrashStore):
    # Arrange: the crashing inputs also written back as reuse records of variant B
    variant_b = toy_target(VARIANT_B)
    for content in BOOM_INPUTS:
        store_of_variant_a.insert(content, CrashMetadata.for_target(variant_b, TOY_APPLET, Discovery.REUSE, SEGV))
    records = store_of_variant_a.query(CrashFilter(applet=TOY_APPLET))
    # Act: perform method under test
    for_variant_a = replay_set(records, toy_target(VARIANT_A))
    for_variant_b = replay_set(records, variant_b)
    without_source = replay_set(records, toy_target(VARIANT_A), exclude_source=True)
    # Assert: only the records a target wrote back itself, or found itself when excluded, are skipped
    assert len(records) == 12 + len(BOOM_INPUTS)
    assert for_variant_a == records
    assert for_variant_b == [record for record in records if record.discovery is Discovery.FUZZING]
    assert {record.source_target_hash for record in without_source} == {variant_b.content_hash}


@pytest.mark.unit
def test_replay_set_skips_own_reuse_records(store_of_variant_a: CrashStore):
    # Arrange: a store that only holds reuse records of variant B
    variant_b = toy_target(VARIANT_B)
    store = CrashStore(store_of_variant_a.path.parent / "reuse-only")
    store.insert(b"BOOM", CrashMetadata.for_target(variant_b, TOY_APPLET, Discovery.REUSE, SEGV))
    # Act & Assert: nothing is left to replay on variant B itself
    assert replay_set(store.query(), variant_b) == []
    with pytest.raises(InputError, match="Empty crash set"):
        screen_target(variant_b, store, None, toy_harness(), replay_debugger(), plan=toy_plan())


@pytest.mark.unit
def test_screening_without_write_back_leaves_the_store_alone(store_of_variant_a: CrashStore):
    # Act: perform method under test
    summary = screen_target(toy_target(VARIANT_B), store_of_variant_a, FUZZING_RECORDS, toy_harness(),
                            replay_debugger(), plan=toy_plan(), write_back=False)
    # Assert: check the summary and the store
    assert summary.crashing == len(BOOM_INPUTS)
    assert len(store_of_variant_a) == 12


@pytest.mark.unit
def test_screening_signatures_match_triage_on_the_source_variant(store_of_variant_a: CrashStore):
    # Arrange: triage the shared bug on variant A
    report = triage_batch(BOOM_INPUTS, toy_plan(), toy_harness(), VARIANT_A, replay_debugger())
    # Act: perform method under test
    summary = screen_target(toy_target(VARIANT_B), store_of_variant_a, FUZZING_RECORDS, toy_harness(),
                            replay_debugger(), plan=toy_plan(), write_back=False)
    # Assert: the same bug keeps its signature across variants
    assert compare_with_fuzzing(summary, report.signatures).counts() == (0, 0, 1)


@pytest.mark.unit
def test_empty_crash_set_raises_input_error(store_of_variant_a: CrashStore):
    # Arrange: a filter nothing matches
    crash_filter = CrashFilter(applet="awk")
    # Act & Assert: check the raised error
    with pytest.raises(InputError, match="Empty crash set"):
        screen_target(toy_target(VARIANT_B), store_of_variant_a, crash_filter, toy_harness(), replay_debugger(),
                      plan=toy_plan())


@pytest.mark.unit
def test_missing_emulator_raises_tool_environment_error(store_of_variant_a: CrashStore, tmp_path: Path):
    # Arrange: an emulated plan on a host without the emulator
    plan = ExecutionPlan(ExecutionMode.EMULATED, Arch.ARM_32, tmp_path)
    with patch("src.fuzzing.execution.shutil.which", return_value=None), \
            pytest.raises(ToolEnvironmentError, match="qemu-arm"):
        # Act & Assert: check the raised error
        screen_target(toy_target(VARIANT_B), store_of_variant_a, FUZZING_RECORDS, toy_harness(), replay_debugger(),
                      plan=plan)


@pytest.mark.unit
def test_cross_validation_replays_each_targets_crashes_on_the_others(store_of_variant_a: CrashStore):
    # Arrange: both variants, only A has stored crashes
    variant_a, variant_b = toy_target(VARIANT_A), toy_target(VARIANT_B)
    plans = {variant_a.content_hash: toy_plan(), variant_b.content_hash: toy_plan()}
    # Act: perform method under test
    summaries = cross_validate([variant_a, variant_b], store_of_variant_a, None, toy_harness(), replay_debugger(),
                               parallelism=4, plans=plans)
    # Assert: A has nothing from other targets, B reproduces the shared bug, nothing is written back
    assert list(summaries) == [variant_b.content_hash]
    assert summaries[variant_b.content_hash].crashing == len(BOOM_INPUTS)
    assert len(store_of_variant_a) == 12


@pytest.mark.unit
@pytest.mark.parametrize(
    ("harness", "input_bytes", "expected_verdict"),
    [
        test_data(toy_harness(), b"BOOM", Verdict.CRASH, id="crash"),
        test_data(toy_harness(), FREE_INPUTS[0], Verdict.CRASH, id="abort"),
        test_data(toy_harness(), b"hello", Verdict.CLEAN, id="clean"),
        test_data(toy_harness(timeout_ms=500), b"LOOP", Verdict.TIMEOUT, id="timeout"),
        test_data(HarnessSpec(("/nonexistent/firmfuzz-target", "@@")), b"x", Verdict.EXEC_ERROR, id="launch-error"),
        test_data(HarnessSpec((sys.executable, "-c", "import os, signal; os.kill(os.getpid(), signal.SIGTERM)", "@@")),
                  b"x", Verdict.EXEC_ERROR, id="non-crash-signal"),
    ],
)
def test_replay_one(harness: HarnessSpec, input_bytes: bytes, expected_verdict: Verdict):
    # Act: perform method under test
    outcome = replay_one(toy_plan(), harness, VARIANT_A, input_bytes, "r1")
    # Assert: check the verdict and its detail
    assert outcome.verdict is expected_verdict
    assert outcome.record_id == "r1"
    if expected_verdict is Verdict.CLEAN:
        assert outcome.exit_code == 0
    if expected_verdict is Verdict.EXEC_ERROR:
        assert outcome.diagnostic


@pytest.mark.unit
def test_replay_of_empty_input_raises_input_error():
    # Act & Assert: check the raised error
    with pytest.raises(InputError, match="empty input"):
        replay_one(toy_plan(), toy_harness(), VARIANT_A, b"")


@pytest.mark.unit
@pytest.mark.parametrize(
    "settings",
    [
        test_data({"verdict": Verdict.CRASH}, id="crash-without-signal"),
        test_data({"verdict": Verdict.CLEAN, "signal": SEGV}, id="clean-with-signal"),
        test_data({"verdict": Verdict.CLEAN}, id="clean-without-exit-code"),
        test_data({"verdict": Verdict.TIMEOUT, "wall_time_ms": -1}, id="negative-time"),
    ],
)
def test_invalid_replay_outcome_raises_validation_error(settings: dict):
    # Arrange: defaults for the remaining fields
    fields = {"record_id": "r1", "wall_time_ms": 3, **settings}
    # Act & Assert: check the raised error
    with pytest.raises(ValidationError):
        ReplayOutcome(**fields)


@pytest.mark.unit
def test_replay_outcome_renders_its_detail():
    # Act & Assert: check the text forms
    assert str(ReplayOutcome("r1", Verdict.CRASH, 5, signal=SEGV)) == "CRASH(SEGV)"
    assert str(ReplayOutcome("r1", Verdict.CLEAN, 5, exit_code=0)) == "CLEAN(0)"
    assert str(ReplayOutcome("r1", Verdict.TIMEOUT, 5)) == "TIMEOUT"


@pytest.mark.unit
def test_summary_cannot_hold_more_signatures_than_crashes():
    # Act & Assert: check the raised error
    with pytest.raises(ValidationError, match="unique_crashing"):
        ReplaySummary("hash", (), signatures=(signature("lookup"),))


@pytest.mark.unit
def test_overlap_of_reuse_and_fuzzing_signatures():
    # Arrange: 19 unique crashes from reuse, 8 from fuzzing, 5 of them common
    reuse, fuzz = signature_sets(19, 8, 5)
    # Act: perform method under test
    overlap = compare_with_fuzzing(reuse, fuzz)
    # Assert: check the counts and the listed signatures
    assert overlap.counts() == (14, 3, 5)
    document = overlap.to_dict()
    assert (document["reuse_only"], document["fuzz_only"], document["common"]) == (14, 3, 5)
    assert len(document["signatures"]["common"]) == 5


@pytest.mark.unit
def test_signatures_from_documents(store_of_variant_a: CrashStore):
    # Arrange: a screening summary and a triage report of the same bug
    summary = screen_target(toy_target(VARIANT_B), store_of_variant_a, FUZZING_RECORDS, toy_harness(),
                            replay_debugger(), plan=toy_plan(), write_back=False)
    report = triage_batch(BOOM_INPUTS[:2], toy_plan(), toy_harness(), VARIANT_A, replay_debugger())
    # Act: perform method under test
    from_summary = signatures_from_document(summary.to_dict())
    from_report = signatures_from_document(report.to_dict())
    # Assert: check both sets
    assert from_summary == set(summary.signatures)
    assert from_report == report.signatures
    assert from_summary == from_report
    with pytest.raises(InputError, match="neither"):
        signatures_from_document({"campaigns": []})
