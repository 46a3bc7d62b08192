from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import TYPE_CHECKING, Any

from src.core.enums import Arch, CrashSignal, Discovery
from src.core.errors import InputError
from src.crashdb.models import CrashFilter, CrashMetadata, CrashSignature
from src.fuzzing.execution import ensure_runnable, execute_once, plan_execution
from src.reuse.models import OverlapReport, ReplayOutcome, ReplaySummary, Verdict
from src.triage.batch import triage_one

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence  # pragma: no cover
    from pathlib import Path  # pragma: no cover

    from src.cache.cache_manager import CacheManager  # pragma: no cover
    from src.crashdb.models import CrashRecord  # pragma: no cover
    from src.crashdb.store import CrashStore  # pragma: no cover
    from src.fuzzing.models import ExecutionPlan, HarnessSpec  # pragma: no cover
    from src.inventory.models import TargetBinary  # pragma: no cover
    from src.triage.debuggers import DebuggerAdapter  # pragma: no cover
    from src.triage.models import TriageEntry  # pragma: no cover

logger = logging.getLogger(__name__)


def replay_one(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path, input_bytes: bytes,
               record_id: str | None = None) -> ReplayOutcome:
    """
    Replay one input on the target and classify the process outcome.

    Crash signals give CRASH, a normal exit gives CLEAN, exceeding the harness timeout gives TIMEOUT
    (the process tree is killed) and a failed launch or a non-crash signal gives EXEC_ERROR.

    Raises
    ------
        InputError: If the input is empty.

    """
    if not input_bytes:
        msg = "Cannot replay an empty input."
        raise InputError(msg)
    run = execute_once(plan, harness, target_path, input_bytes)
    if run.launch_error is not None:
        return ReplayOutcome(record_id, Verdict.EXEC_ERROR, run.wall_time_ms, diagnostic=run.launch_error)
    if run.timed_out:
        return ReplayOutcome(record_id, Verdict.TIMEOUT, run.wall_time_ms)
    if run.signal is not None:
        if run.signal.is_crash:
            return ReplayOutcome(record_id, Verdict.CRASH, run.wall_time_ms, signal=run.signal)
        return ReplayOutcome(record_id, Verdict.EXEC_ERROR, run.wall_time_ms,
                             diagnostic=f"terminated by signal {run.signal}")
    return ReplayOutcome(record_id, Verdict.CLEAN, run.wall_time_ms, exit_code=run.returncode)


def _write_back(store: CrashStore, target: TargetBinary, record: CrashRecord, input_bytes: bytes,
                signal: CrashSignal, signature: CrashSignature | None) -> None:
    metadata = CrashMetadata.for_target(target, record.applet, Discovery.REUSE, signal, signature)
    if not metadata.component:
        metadata = replace(metadata, component=record.component)
    store.insert(input_bytes, metadata)


def replay_set(records: Iterable[CrashRecord], target: TargetBinary, *,
               exclude_source: bool = False) -> list[CrashRecord]:
    """
    Select the records a screening of `target` replays, keeping their order.

    REUSE records written back by earlier screenings of the same target are never replayed, so a
    repeated screening sees the same replay set as the first one.
    """
    return [record for record in records
            if record.source_target_hash != target.content_hash
            or not (exclude_source or record.discovery is Discovery.REUSE)]


def screen_target(target: TargetBinary, store: CrashStore, crash_filter: CrashFilter | None,  # noqa: PLR0913
                  harness: HarnessSpec, debugger: DebuggerAdapter, parallelism: int = 1,
                  plan: ExecutionPlan | None = None, cache: CacheManager | None = None, *,
                  write_back: bool = True, exclude_source: bool = False) -> ReplaySummary:
    """
    Replay every stored crash matching the filter on a new target.

    Crashing replays are triaged for their signature and written back to the store as REUSE records
    of this target; those are skipped when the same target is screened again. Replays may run in
    parallel; triage and write-back follow record order, so the summary does not depend on `parallelism`.

    Args:
    ----
        target (TargetBinary): The binary under screening.
        store (CrashStore): Crash store holding the candidate inputs.
        crash_filter (CrashFilter | None): Which records to replay; None replays all.
        harness (HarnessSpec): How to run the target.
        debugger (DebuggerAdapter): Debugger used to sign crashing replays.
        parallelism (int): Concurrent replays.
        plan (ExecutionPlan | None): Execution plan; derived from the host and harness sysroot when None.
        cache (CacheManager | None): Triage cache.
        write_back (bool): Whether to insert crashing replays into the store.
        exclude_source (bool): Skip records that were found on this very target.

    Raises:
    ------
        InputError: If no record matches the filter.
        ToolEnvironmentError: If the target cannot be executed on this host.

    """
    records = replay_set(store.query(crash_filter or CrashFilter()), target, exclude_source=exclude_source)
    if not records:
        msg = "Empty crash set: no stored crash matches the filter."
        raise InputError(msg)
    plan = plan or plan_execution(target, Arch.host(), harness.sysroot)
    ensure_runnable(plan)
    logger.info("Replaying %d stored crashes on %s (%s)", len(records), target.path, plan)

    blobs = {record.record_id: store.get_blob(record.input_hash) for record in records}

    def replay(record: CrashRecord) -> ReplayOutcome:
        return replay_one(plan, harness, target.path, blobs[record.record_id], record.record_id)

    with ThreadPoolExecutor(max_workers=max(1, parallelism), thread_name_prefix="replay") as executor:
        outcomes = list(executor.map(replay, records))

    crashing = [(record, outcome) for record, outcome in zip(records, outcomes, strict=True)
                if outcome.verdict is Verdict.CRASH]

    def triage(pair: tuple[CrashRecord, ReplayOutcome]) -> TriageEntry:
        return triage_one(plan, harness, target.path, blobs[pair[0].record_id], debugger, cache)

    with ThreadPoolExecutor(max_workers=max(1, parallelism), thread_name_prefix="triage") as executor:
        entries = list(executor.map(triage, crashing))

    signatures = []
    for (record, outcome), entry in zip(crashing, entries, strict=True):
        if entry.signature is not None:
            signatures.append(entry.signature)
        if write_back:
            _write_back(store, target, record, blobs[record.record_id], outcome.signal, entry.signature)

    summary = ReplaySummary(
        target_hash=target.content_hash,
        per_outcome=tuple(outcomes),
        signatures=tuple(signatures),
        triage_failures=sum(1 for entry in entries if entry.error is not None),
    )
    logger.info("%d replayed, %d crashing (%d unique), %d timeouts, %d exec errors", summary.total_replayed,
                summary.crashing, summary.unique_crashing, summary.timeouts, summary.exec_errors)
    return summary


def compare_with_fuzzing(reuse_signatures: ReplaySummary | Iterable[CrashSignature],
                         fuzz_signatures: Iterable[CrashSignature]) -> OverlapReport:
    """Split the unique signatures of crash reuse and fuzzing into reuse-only, fuzz-only and common."""
    if isinstance(reuse_signatures, ReplaySummary):
        reuse_signatures = reuse_signatures.signatures
    reuse_set = frozenset(reuse_signatures)
    fuzz_set = frozenset(fuzz_signatures)
    return OverlapReport(reuse_only=reuse_set - fuzz_set, fuzz_only=fuzz_set - reuse_set, common=reuse_set & fuzz_set)


def cross_validate(targets: Sequence[TargetBinary], store: CrashStore, crash_filter: CrashFilter | None,  # noqa: PLR0913
                   harness: HarnessSpec, debugger: DebuggerAdapter, parallelism: int = 1,
                   plans: dict[str, ExecutionPlan] | None = None,
                   cache: CacheManager | None = None) -> dict[str, ReplaySummary]:
    """
    Replay the crashes found on each target against every other target.

    Nothing is written back. Targets with no crashes from other targets are left out of the result.

    Returns
    -------
        dict[str, ReplaySummary]: Summary per target content hash, in target order.

    """
    summaries = {}
    for target in targets:
        plan = (plans or {}).get(target.content_hash)
        try:
            summaries[target.content_hash] = screen_target(
                target, store, crash_filter, harness, debugger, parallelism, plan, cache,
                write_back=False, exclude_source=True)
        except InputError as error:
            logger.info("Skipping %s: %s", target.path, error)
    return summaries


def signatures_from_document(document: dict[str, Any]) -> set[CrashSignature]:
    """
    Read the signature set out of a screening summary or a triage report JSON document.

    Raises
    ------
        InputError: If the document holds neither.

    """
    if "signatures" in document and isinstance(document["signatures"], list):
        return {CrashSignature.from_dict(item) for item in document["signatures"]}
    if "groups" in document:
        return {CrashSignature.from_dict(group["signature"]) for group in document["groups"]}
    msg = "Document is neither a screening summary nor a triage report."
    raise InputError(msg)
