from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from src.core.enums import CrashSignal
from src.crashdb.models import CrashSignature

UNKNOWN_MODULE = "??"


class Classification(Enum):
    """Closed set of crash classification tags."""

    STACK_EXHAUSTION = "stack-exhaustion"
    NULL_DEREF = "null-deref"
    ABORT = "abort"
    INVALID_DEREF = "invalid-deref"
    OTHER = "other"


@dataclass(frozen=True)
class Frame:
    """
    One backtrace frame with its absolute address already stripped.

    `offset` is relative to the start of `module` and is only meaningful for frames without a symbol.
    """

    module: str
    symbol: str | None = None
    offset: int = 0

    @property
    def normalized(self) -> str:
        """The symbol name, or `module+0xOFFSET` for frames without one."""
        if self.symbol:
            return self.symbol
        return f"{self.module}+0x{self.offset:x}"

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {"module": self.module, "symbol": self.symbol, "offset": self.offset}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> Frame:  # noqa: D102
        return Frame(data.get("module", UNKNOWN_MODULE), data.get("symbol"), int(data.get("offset", 0)))


@dataclass(frozen=True)
class TriageResult:
    """
    What the debugger says about one crash.

    A `degraded` result comes from a plain replay because no debugger was usable; it has no frames.
    """

    signal: CrashSignal
    classification: Classification
    frames: tuple[Frame, ...] = ()
    fault_address: int | None = None
    raw_backtrace: str = ""
    degraded: bool = False

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {
            "signal": self.signal.label,
            "classification": self.classification.value,
            "frames": [frame.to_dict() for frame in self.frames],
            "fault_address": self.fault_address,
            "raw_backtrace": self.raw_backtrace,
            "degraded": self.degraded,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> TriageResult:  # noqa: D102
        return TriageResult(
            signal=CrashSignal.from_label(data["signal"]),
            classification=Classification(data["classification"]),
            frames=tuple(Frame.from_dict(frame) for frame in data.get("frames", [])),
            fault_address=data.get("fault_address"),
            raw_backtrace=data.get("raw_backtrace", ""),
            degraded=bool(data.get("degraded", False)),
        )


@dataclass(frozen=True)
class MinimizationResult:  # noqa: D101
    original_len: int
    minimized_len: int
    minimized_input: bytes
    preserved_signature: CrashSignature
    steps: int
    budget_exhausted: bool = False

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {
            "original_len": self.original_len,
            "minimized_len": self.minimized_len,
            "preserved_signature": self.preserved_signature.to_dict(),
            "steps": self.steps,
            "budget_exhausted": self.budget_exhausted,
        }


@dataclass(frozen=True)
class TriageEntry:
    """Triage outcome of one input of a batch; exactly one of `result` and `error` is set."""

    input_hash: str
    input_len: int
    result: TriageResult | None = None
    signature: CrashSignature | None = None
    error: str | None = None
    flaky: bool = False


@dataclass
class TriageGroup:
    """Inputs sharing one signature; the representative is the shortest of them."""

    signature: CrashSignature
    classification: Classification
    representative: TriageEntry
    members: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        result = self.representative.result
        return {
            "signature": self.signature.to_dict(),
            "classification": self.classification.value,
            "representative_input_hash": self.representative.input_hash,
            "representative_input_len": self.representative.input_len,
            "members": list(self.members),
            "frames": [frame.normalized for frame in result.frames] if result else [],
        }


@dataclass
class TriageReport:  # noqa: D101
    groups: list[TriageGroup] = field(default_factory=list)
    entries: list[TriageEntry] = field(default_factory=list)

    @property
    def failures(self) -> list[TriageEntry]:  # noqa: D102
        return [entry for entry in self.entries if entry.error is not None]

    @property
    def signatures(self) -> set[CrashSignature]:  # noqa: D102
        return {group.signature for group in self.groups}

    def to_dict(self) -> dict[str, Any]:
        """Return the machine-readable report."""
        return {
            "inputs": len(self.entries),
            "unique_crashes": len(self.groups),
            "groups": [group.to_dict() for group in self.groups],
            "failures": [
                {"input_hash": entry.input_hash, "flaky": entry.flaky, "error": entry.error}
                for entry in self.failures
            ],
        }

    def render_text(self) -> str:
        """Return the human-readable report."""
        lines = [f"Triage report: {len(self.entries)} inputs, {len(self.groups)} unique crashes, "
                 f"{len(self.failures)} failed"]
        for number, group in enumerate(self.groups, start=1):
            representative = group.representative
            lines.append(f"[{number}] {group.signature.short_id} {group.classification.value} "
                         f"({len(group.members)} inputs)")
            lines.append(f"    representative: {representative.input_hash[:16]} ({representative.input_len} bytes)")
            frames = representative.result.frames if representative.result else ()
            lines.extend(f"    #{index} {frame.normalized}" for index, frame in enumerate(frames[:10]))
            if len(frames) > 10:  # noqa: PLR2004
                lines.append(f"    ... {len(frames) - 10} more frames")
        if self.failures:
            lines.append("Failed inputs:")
            lines.extend(f"    {entry.input_hash[:16]} {'flaky' if entry.flaky else 'error'}: {entry.error}"
                         for entry in self.failures)
        return "\n".join(lines) + "\n"
