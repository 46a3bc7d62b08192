from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from src.core.constants import DEFAULT_MINIMIZATION_STEPS
from src.core.errors import FlakyCrashError, InputError
from src.fuzzing.execution import execute_once
from src.triage.classifier import classify_crash
from src.triage.models import MinimizationResult
from src.triage.signature import signature_from

if TYPE_CHECKING:
    from pathlib import Path  # pragma: no cover

    from src.crashdb.models import CrashSignature  # pragma: no cover
    from src.fuzzing.models import ExecutionPlan, HarnessSpec  # pragma: no cover
    from src.triage.debuggers import DebuggerAdapter  # pragma: no cover

logger = logging.getLogger(__name__)


class _BudgetExhaustedError(Exception):
    pass


def split_chunks(data: bytes, count: int) -> list[bytes]:
    """Split `data` into `count` contiguous chunks whose sizes differ by at most one byte."""
    size, remainder = divmod(len(data), count)
    chunks, position = [], 0
    for index in range(count):
        length = size + (1 if index < remainder else 0)
        chunks.append(data[position:position + length])
        position += length
    return [chunk for chunk in chunks if chunk]


class _CrashOracle:
    """Replays candidates and checks they crash with the wanted signature; outcomes are cached by content."""

    def __init__(self, plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,  # noqa: PLR0913
                 target_signature: CrashSignature, debugger: DebuggerAdapter, max_steps: int) -> None:
        self.plan = plan
        self.harness = harness
        self.target_path = target_path
        self.target_signature = target_signature
        self.debugger = debugger
        self.max_steps = max_steps
        self.steps = 0
        self.outcomes: dict[bytes, bool] = {}

    def __call__(self, candidate: bytes) -> bool:
        if not candidate:
            return False
        if candidate in self.outcomes:
            return self.outcomes[candidate]
        if self.steps >= self.max_steps:
            raise _BudgetExhaustedError
        self.steps += 1
        run = execute_once(self.plan, self.harness, self.target_path, candidate)
        outcome = run.signal == self.target_signature.signal
        if outcome:
            try:
                result = classify_crash(self.plan, self.harness, self.target_path, candidate, self.debugger)
            except FlakyCrashError:
                outcome = False
            else:
                outcome = signature_from(result) == self.target_signature
        self.outcomes[candidate] = outcome
        return outcome


def minimize_input(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,  # noqa: PLR0913
                   input_bytes: bytes, target_signature: CrashSignature, debugger: DebuggerAdapter,
                   max_steps: int = DEFAULT_MINIMIZATION_STEPS) -> MinimizationResult:
    """
    Shrink a crashing input with delta debugging while it keeps crashing with the same signature.

    Chunks start at granularity 2; each round tries every chunk alone, then every complement, and
    doubles the granularity when neither reduces the input. The result is 1-minimal at the final
    granularity. `steps` counts target executions, including the initial verification replay.

    Raises
    ------
        InputError: If the input is empty.
        FlakyCrashError: If the original input does not reproduce the signature.

    """
    if not input_bytes:
        msg = "Cannot minimize an empty input."
        raise InputError(msg)
    oracle = _CrashOracle(plan, harness, target_path, target_signature, debugger, max(1, max_steps))
    if not oracle(input_bytes):
        msg = f"Input does not reproduce signature {target_signature.short_id}"
        raise FlakyCrashError(msg)

    current = input_bytes
    granularity = 2
    budget_exhausted = False
    try:
        while len(current) >= 2:  # noqa: PLR2004
            chunks = split_chunks(current, min(granularity, len(current)))
            reduced = False
            for chunk in chunks:
                if oracle(chunk):
                    current, granularity, reduced = chunk, 2, True
                    break
            if not reduced and len(chunks) > 2:  # noqa: PLR2004
                for index in range(len(chunks)):
                    complement = b"".join(chunks[:index] + chunks[index + 1:])
                    if oracle(complement):
                        current, granularity, reduced = complement, max(len(chunks) - 1, 2), True
                        break
            if not reduced:
                if len(chunks) >= len(current):
                    break
                granularity = min(len(current), len(chunks) * 2)
    except _BudgetExhaustedError:
        budget_exhausted = True
        logger.warning("Minimization budget of %d executions exhausted at %d bytes", max_steps, len(current))

    logger.info("Minimized %d bytes to %d in %d executions", len(input_bytes), len(current), oracle.steps)
    return MinimizationResult(
        original_len=len(input_bytes),
        minimized_len=len(current),
        minimized_input=current,
        preserved_signature=target_signature,
        steps=oracle.steps,
        budget_exhausted=budget_exhausted,
    )
