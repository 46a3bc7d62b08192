from __future__ import annotations

from typing import TYPE_CHECKING

from src.core.constants import DEFAULT_SIGNATURE_FRAMES, PAGE_SIZE, STACK_EXHAUSTION_DEPTH
from src.core.enums import ABRT, BUS, SEGV
from src.crashdb.models import CrashSignature
from src.inventory.fingerprint import short_digest
from src.triage.models import Classification, TriageResult

if TYPE_CHECKING:
    from collections.abc import Sequence  # pragma: no cover

    from src.core.enums import CrashSignal  # pragma: no cover
    from src.triage.models import Frame  # pragma: no cover

MAX_CYCLE_START = 32
MAX_CYCLE_LENGTH = 16
MIN_CYCLE_REPEATS = 4
FRAME_HASH_BYTES = 16


def find_repeating_cycle(names: Sequence[str]) -> tuple[int, int, int] | None:
    """
    Find the recursion cycle in a list of frame names, innermost first.

    Looks for the earliest start (at most 32 frames deep) and then the shortest cycle (at most 16 frames)
    that repeats at least 4 times in a row.

    Returns
    -------
        tuple | None: (start, cycle length, end of the periodic run) or None.

    """
    for start in range(min(MAX_CYCLE_START + 1, len(names))):
        for length in range(1, MAX_CYCLE_LENGTH + 1):
            end = start + length
            while end < len(names) and names[end] == names[end - length]:
                end += 1
            if end - start >= length * MIN_CYCLE_REPEATS:
                return start, length, end
    return None


def _canonical_rotation(cycle: Sequence[str]) -> list[str]:
    rotations = [list(cycle[index:]) + list(cycle[:index]) for index in range(len(cycle))]
    return min(rotations)


def collapse_recursion(names: Sequence[str]) -> list[str]:
    """
    Replace the repeating run with one canonical copy of its cycle and drop the callers below it.

    The result does not depend on the recursion depth or on whether the debugger truncated the backtrace.
    """
    cycle = find_repeating_cycle(names)
    if cycle is None:
        return list(names)
    start, length, _ = cycle
    return [*names[:start], *_canonical_rotation(names[start:start + length])]


def classify(signal: CrashSignal, frames: Sequence[Frame], fault_address: int | None,
             depth_threshold: int = STACK_EXHAUSTION_DEPTH) -> Classification:
    """
    Assign a classification tag.

    Deep stacks (at least `depth_threshold` frames) with a repeating cycle are stack exhaustion;
    SEGV below the first page is a null dereference; ABRT is an abort; other SEGV and BUS are invalid
    dereferences; everything else is 'other'.
    """
    if len(frames) >= depth_threshold and find_repeating_cycle([frame.normalized for frame in frames]):
        return Classification.STACK_EXHAUSTION
    if signal == SEGV and fault_address is not None and fault_address < PAGE_SIZE:
        return Classification.NULL_DEREF
    if signal == ABRT:
        return Classification.ABORT
    if signal in (SEGV, BUS):
        return Classification.INVALID_DEREF
    return Classification.OTHER


def signature_from(result: TriageResult, top_frames: int = DEFAULT_SIGNATURE_FRAMES) -> CrashSignature:
    """
    Derive the deduplication signature of a triage result.

    The frame hash is a 16-byte digest over the top `top_frames` normalized frames; stack exhaustion
    traces are collapsed to their cycle first. Results without frames get a low-confidence signature.
    """
    names = [frame.normalized for frame in result.frames]
    if result.classification is Classification.STACK_EXHAUSTION:
        names = collapse_recursion(names)
    top = names[:top_frames]
    return CrashSignature(
        signal=result.signal,
        frame_hash=short_digest("\n".join(top).encode(), FRAME_HASH_BYTES),
        top_frame=top[0] if top else "",
        low_confidence=result.degraded or not top,
    )
