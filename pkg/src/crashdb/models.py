from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

from src.core.enums import Arch, CrashSignal, Discovery, arch_label
from src.core.errors import ValidationError
from src.inventory.models import VersionInfo

if TYPE_CHECKING:
    from src.inventory.models import TargetBinary  # pragma: no cover

FRAME_HASH_HEX_LENGTH = 32


@dataclass(frozen=True)
class CrashSignature:
    """
    Identity of a bug as seen from its crash: the signal plus a digest of the top normalized frames.

    Two signatures are equal exactly when their signal and frame hash are; the top frame and the
    confidence flag are descriptive only.
    """

    signal: CrashSignal
    frame_hash: str
    top_frame: str = field(default="", compare=False)
    low_confidence: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:  # noqa: D105
        if len(self.frame_hash) != FRAME_HASH_HEX_LENGTH:
            msg = f"Frame hash must be {FRAME_HASH_HEX_LENGTH} hex characters, got '{self.frame_hash}'"
            raise ValidationError(msg)

    @property
    def short_id(self) -> str:
        """Compact label such as 'SEGV:1a2b3c4d'."""
        return f"{self.signal.label}:{self.frame_hash[:8]}"

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {
            "signal": self.signal.label,
            "frame_hash": self.frame_hash,
            "top_frame": self.top_frame,
            "low_confidence": self.low_confidence,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> CrashSignature:  # noqa: D102
        return CrashSignature(
            signal=CrashSignal.from_label(data["signal"]),
            frame_hash=data["frame_hash"],
            top_frame=data.get("top_frame", ""),
            low_confidence=bool(data.get("low_confidence", False)),
        )


@dataclass(frozen=True)
class CrashMetadata:
    """Provenance passed to `CrashStore.insert` along with the crashing input."""

    component: str
    applet: str
    source_target_hash: str
    source_arch: Arch
    discovery: Discovery
    signal: CrashSignal
    source_version: VersionInfo | None = None
    source_machine: int | None = None
    signature: CrashSignature | None = None

    @staticmethod
    def for_target(target: TargetBinary, applet: str, discovery: Discovery, signal: CrashSignal,
                   signature: CrashSignature | None = None) -> CrashMetadata:
        """Build provenance for a crash of `applet` observed on `target`."""
        return CrashMetadata(
            component=target.component or "",
            applet=applet,
            source_target_hash=target.content_hash,
            source_arch=target.arch,
            discovery=discovery,
            signal=signal,
            source_version=target.version,
            source_machine=target.machine,
            signature=signature,
        )


@dataclass(frozen=True)
class CrashRecord:  # noqa: D101
    record_id: str
    input_hash: str
    input_len: int
    component: str
    applet: str
    source_target_hash: str
    source_arch: Arch
    discovery: Discovery
    signal: CrashSignal
    recorded_at: str
    source_version: VersionInfo | None = None
    source_machine: int | None = None
    signature: CrashSignature | None = None

    def with_signature(self, signature: CrashSignature) -> CrashRecord:  # noqa: D102
        return replace(self, signature=signature)

    def to_dict(self) -> dict[str, Any]:
        """Return the index line form of the record."""
        return {
            "record_id": self.record_id,
            "input_hash": self.input_hash,
            "input_len": self.input_len,
            "component": self.component,
            "applet": self.applet,
            "source_target_hash": self.source_target_hash,
            "source_version": self.source_version.dotted if self.source_version else None,
            "source_arch": arch_label(self.source_arch, self.source_machine),
            "source_machine": self.source_machine,
            "discovery": self.discovery.value,
            "signal": self.signal.label,
            "signature": self.signature.to_dict() if self.signature else None,
            "recorded_at": self.recorded_at,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> CrashRecord:  # noqa: D102
        return CrashRecord(
            record_id=data["record_id"],
            input_hash=data["input_hash"],
            input_len=int(data["input_len"]),
            component=data["component"],
            applet=data["applet"],
            source_target_hash=data["source_target_hash"],
            source_version=VersionInfo.parse(data["source_version"]) if data.get("source_version") else None,
            source_arch=Arch.from_label(data["source_arch"]),
            source_machine=data.get("source_machine"),
            discovery=Discovery(data["discovery"]),
            signal=CrashSignal.from_label(data["signal"]),
            signature=CrashSignature.from_dict(data["signature"]) if data.get("signature") else None,
            recorded_at=data["recorded_at"],
        )


@dataclass(frozen=True)
class CrashFilter:
    """
    Conjunctive record filter; unset fields match everything.

    `version_range` is half-open `[low, high)` and never matches records without a version.
    """

    component: str | None = None
    applet: str | None = None
    version_range: tuple[VersionInfo, VersionInfo] | None = None
    arch: Arch | None = None
    discovery: Discovery | None = None

    def matches(self, record: CrashRecord) -> bool:  # noqa: D102
        if self.component is not None and record.component != self.component:
            return False
        if self.applet is not None and record.applet != self.applet:
            return False
        if self.arch is not None and record.source_arch is not self.arch:
            return False
        if self.discovery is not None and record.discovery is not self.discovery:
            return False
        if self.version_range is not None:
            low, high = self.version_range
            version = record.source_version
            if version is None or not (low <= version < high):
                return False
        return True


@dataclass(frozen=True)
class StoreStats:
    """Raw and unique crash counts of a store."""

    records: int
    blobs: int
    signed: int
    unique_signatures: int

    columns = ("records", "blobs", "signed", "unsigned", "unique_signatures")

    @property
    def unsigned(self) -> int:  # noqa: D102
        return self.records - self.signed

    def as_rows(self) -> list[tuple[int, ...]]:  # noqa: D102
        return [(self.records, self.blobs, self.signed, self.unsigned, self.unique_signatures)]

    def to_dict(self) -> dict[str, int]:  # noqa: D102
        return {
            "records": self.records,
            "blobs": self.blobs,
            "signed": self.signed,
            "unsigned": self.unsigned,
            "unique_signatures": self.unique_signatures,
        }
