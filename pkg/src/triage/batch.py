from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

from src.core.errors import FirmFuzzError, FlakyCrashError
from src.inventory.fingerprint import fingerprint
from src.triage.classifier import classify_crash
from src.triage.models import TriageEntry, TriageGroup, TriageReport
from src.triage.signature import signature_from

if TYPE_CHECKING:
    from collections.abc import Sequence  # pragma: no cover
    from pathlib import Path  # pragma: no cover

    from src.cache.cache_manager import CacheManager  # pragma: no cover
    from src.crashdb.models import CrashSignature  # pragma: no cover
    from src.fuzzing.models import ExecutionPlan, HarnessSpec  # pragma: no cover
    from src.triage.debuggers import DebuggerAdapter  # pragma: no cover

logger = logging.getLogger(__name__)


def triage_one(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path, input_bytes: bytes,  # noqa: PLR0913
               debugger: DebuggerAdapter, cache: CacheManager | None = None) -> TriageEntry:
    """Classify one input; failures are captured in the entry instead of raised."""
    input_hash = fingerprint(input_bytes)
    try:
        result = classify_crash(plan, harness, target_path, input_bytes, debugger, cache)
    except FlakyCrashError as error:
        return TriageEntry(input_hash, len(input_bytes), error=str(error), flaky=True)
    except FirmFuzzError as error:
        return TriageEntry(input_hash, len(input_bytes), error=str(error))
    return TriageEntry(input_hash, len(input_bytes), result=result, signature=signature_from(result))


def group_entries(entries: Sequence[TriageEntry]) -> list[TriageGroup]:
    """Group classified entries by signature, in order of first appearance, keeping the shortest as representative."""
    groups: dict[CrashSignature, TriageGroup] = {}
    for entry in entries:
        if entry.signature is None or entry.result is None:
            continue
        group = groups.get(entry.signature)
        if group is None:
            groups[entry.signature] = TriageGroup(entry.signature, entry.result.classification, entry, [])
            group = groups[entry.signature]
        group.members.append(entry.input_hash)
        representative = group.representative
        if (entry.input_len, entry.input_hash) < (representative.input_len, representative.input_hash):
            group.representative = entry
    return list(groups.values())


def triage_batch(inputs: Sequence[bytes], plan: ExecutionPlan, harness: HarnessSpec,  # noqa: PLR0913
                 target_path: str | Path, debugger: DebuggerAdapter, parallelism: int = 1,
                 cache: CacheManager | None = None) -> TriageReport:
    """
    Triage a set of crashing inputs and deduplicate them by signature.

    Per-input failures, flaky inputs included, are listed in the report and never stop the batch.
    """
    logger.info("Triaging %d inputs with %s", len(inputs), debugger.name)

    def triage(input_bytes: bytes) -> TriageEntry:
        return triage_one(plan, harness, target_path, input_bytes, debugger, cache)

    with ThreadPoolExecutor(max_workers=max(1, parallelism), thread_name_prefix="triage") as executor:
        entries = list(executor.map(triage, inputs))
    report = TriageReport(groups=group_entries(entries), entries=entries)
    logger.info("%d unique crashes, %d failed inputs", len(report.groups), len(report.failures))
    return report
