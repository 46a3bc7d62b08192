from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING

from src.cache.cache_keys import triage_key
from src.core.errors import FlakyCrashError
from src.fuzzing.execution import execute_once
from src.inventory.fingerprint import fingerprint, fingerprint_file
from src.triage.models import TriageResult
from src.triage.signature import classify
from src.triage.transcript import parse_transcript

if TYPE_CHECKING:
    from src.cache.cache_manager import CacheManager  # pragma: no cover
    from src.fuzzing.models import ExecutionPlan, HarnessSpec  # pragma: no cover
    from src.triage.debuggers import DebuggerAdapter  # pragma: no cover

logger = logging.getLogger(__name__)


def _degraded_result(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,
                     input_bytes: bytes) -> TriageResult:
    run = execute_once(plan, harness, target_path, input_bytes)
    if run.signal is None or not run.signal.is_crash:
        msg = f"Input {fingerprint(input_bytes)[:16]} did not crash on replay (exit {run.returncode})"
        raise FlakyCrashError(msg)
    return TriageResult(signal=run.signal, classification=classify(run.signal, (), None), degraded=True)


def classify_crash(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path, input_bytes: bytes,
                   debugger: DebuggerAdapter, cache: CacheManager | None = None) -> TriageResult:
    """
    Run a crashing input under the debugger and classify the crash.

    When the debugger is unavailable or produces no transcript, the input is replayed without it and a
    degraded result (signal only, no frames) is returned. Full results are cached per
    (target, input, debugger) when a cache is given.

    Raises
    ------
        FlakyCrashError: If the input does not crash under the debugger or on replay.

    """
    cache_key = None
    if cache is not None:
        cache_key = triage_key(fingerprint_file(Path(target_path)), fingerprint(input_bytes), debugger.name)
        cached = cache.get(cache_key)
        if cached is not None:
            logger.debug("Triage cache hit for %s", cache_key)
            return TriageResult.from_dict(cached)

    if not debugger.is_available(plan):
        logger.debug("Debugger %s unavailable, falling back to a plain replay", debugger.name)
        return _degraded_result(plan, harness, target_path, input_bytes)
    transcript = debugger.run(plan, harness, target_path, input_bytes)
    if not transcript.strip():
        logger.warning("Debugger %s produced no transcript, falling back to a plain replay", debugger.name)
        return _degraded_result(plan, harness, target_path, input_bytes)

    parsed = parse_transcript(transcript)
    if parsed.signal is None or not parsed.signal.is_crash:
        state = "exited normally" if parsed.exited_normally else f"signal {parsed.signal or 'none'}"
        msg = f"Input {fingerprint(input_bytes)[:16]} did not crash under {debugger.name} ({state})"
        raise FlakyCrashError(msg)
    result = TriageResult(
        signal=parsed.signal,
        classification=classify(parsed.signal, parsed.frames, parsed.fault_address),
        frames=tuple(parsed.frames),
        fault_address=parsed.fault_address,
        raw_backtrace=transcript,
    )
    if cache is not None and cache_key is not None:
        cache.set(cache_key, result.to_dict())
    return result
