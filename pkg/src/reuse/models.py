from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

from src.core.enums import CrashSignal
from src.core.errors import ValidationError
from src.crashdb.models import CrashSignature


class Verdict(Enum):  # noqa: D101
    CRASH = "crash"
    CLEAN = "clean"
    TIMEOUT = "timeout"
    EXEC_ERROR = "exec_error"


@dataclass(frozen=True)
class ReplayOutcome:
    """
    Result of replaying one stored crash on a target.

    CRASH carries the terminating signal, CLEAN the exit code and EXEC_ERROR a diagnostic.
    """

    record_id: str | None
    verdict: Verdict
    wall_time_ms: int
    signal: CrashSignal | None = None
    exit_code: int | None = None
    diagnostic: str | None = None

    def __post_init__(self) -> None:  # noqa: D105
        if self.wall_time_ms < 0:
            msg = "Replay wall time must not be negative."
            raise ValidationError(msg)
        if (self.verdict is Verdict.CRASH) != (self.signal is not None):
            msg = "A replay outcome carries a signal exactly when it is a CRASH."
            raise ValidationError(msg)
        if self.verdict is Verdict.CLEAN and self.exit_code is None:
            msg = "A CLEAN replay outcome needs its exit code."
            raise ValidationError(msg)

    def __str__(self) -> str:  # noqa: D105
        detail = {
            Verdict.CRASH: f"({self.signal})",
            Verdict.CLEAN: f"({self.exit_code})",
            Verdict.EXEC_ERROR: f"({self.diagnostic})",
        }.get(self.verdict, "")
        return f"{self.verdict.name}{detail}"

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {
            "record_id": self.record_id,
            "verdict": self.verdict.name,
            "signal": self.signal.label if self.signal else None,
            "exit_code": self.exit_code,
            "diagnostic": self.diagnostic,
            "wall_time_ms": self.wall_time_ms,
        }


@dataclass(frozen=True)
class ReplaySummary:
    """
    Outcome of screening one target against stored crashes.

    Raw counts come from the replay verdicts; `unique_crashing` is the number of distinct triage
    signatures among the crashing replays.
    """

    target_hash: str
    per_outcome: tuple[ReplayOutcome, ...]
    signatures: tuple[CrashSignature, ...] = ()
    triage_failures: int = 0

    def __post_init__(self) -> None:  # noqa: D105
        if self.unique_crashing > self.crashing:
            msg = "unique_crashing cannot exceed crashing."
            raise ValidationError(msg)

    columns = ("record_id", "verdict", "signal", "exit_code", "wall_time_ms")

    def as_rows(self) -> list[tuple[Any, ...]]:
        """One row per replayed record."""
        return [(outcome.record_id, outcome.verdict.name, outcome.signal.label if outcome.signal else None,
                 outcome.exit_code, outcome.wall_time_ms) for outcome in self.per_outcome]

    def _count(self, verdict: Verdict) -> int:
        return sum(1 for outcome in self.per_outcome if outcome.verdict is verdict)

    @property
    def total_replayed(self) -> int:  # noqa: D102
        return len(self.per_outcome)

    @property
    def crashing(self) -> int:  # noqa: D102
        return self._count(Verdict.CRASH)

    @property
    def unique_crashing(self) -> int:  # noqa: D102
        return len(set(self.signatures))

    @property
    def timeouts(self) -> int:  # noqa: D102
        return self._count(Verdict.TIMEOUT)

    @property
    def exec_errors(self) -> int:  # noqa: D102
        return self._count(Verdict.EXEC_ERROR)

    @property
    def clean(self) -> int:  # noqa: D102
        return self._count(Verdict.CLEAN)

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON form: counts, the signature list and every outcome."""
        return {
            "target_hash": self.target_hash,
            "total_replayed": self.total_replayed,
            "crashing": self.crashing,
            "unique_crashing": self.unique_crashing,
            "timeouts": self.timeouts,
            "exec_errors": self.exec_errors,
            "clean": self.clean,
            "triage_failures": self.triage_failures,
            "signatures": [signature.to_dict() for signature in sorted(
                set(self.signatures), key=lambda signature: (signature.signal, signature.frame_hash))],
            "per_outcome": [outcome.to_dict() for outcome in self.per_outcome],
        }


@dataclass(frozen=True)
class OverlapReport:
    """Set algebra of unique crash signatures found by crash reuse and by fuzzing."""

    reuse_only: frozenset[CrashSignature]
    fuzz_only: frozenset[CrashSignature]
    common: frozenset[CrashSignature]

    def counts(self) -> tuple[int, int, int]:
        """Return (reuse_only, fuzz_only, common) sizes."""
        return len(self.reuse_only), len(self.fuzz_only), len(self.common)

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        def listed(signatures: frozenset[CrashSignature]) -> list[str]:
            return sorted(signature.short_id for signature in signatures)

        return {
            "reuse_only": len(self.reuse_only),
            "fuzz_only": len(self.fuzz_only),
            "common": len(self.common),
            "signatures": {
                "reuse_only": listed(self.reuse_only),
                "fuzz_only": listed(self.fuzz_only),
                "common": listed(self.common),
            },
        }
