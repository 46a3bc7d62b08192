from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src.core.constants import UNKNOWN_LABEL
from src.core.enums import Arch, arch_label
from src.core.errors import InputError, ValidationError

VERSION_PATTERN = re.compile(r"v?(\d+)\.(\d+)(?:\.(\d+))?")


@functools.total_ordering
@dataclass(frozen=True)
class VersionInfo:
    """
    A dotted component version such as 1.36.1 or 1.7.

    Ordering is lexicographic on (major, minor, patch) with an absent patch sorting below patch 0.
    Components are non-negative, so versions compare equal exactly when they sort equal.
    `raw` keeps the text as it was matched and does not take part in comparisons.
    """

    major: int
    minor: int
    patch: int | None = None
    raw: str = field(default="", compare=False)

    def __post_init__(self) -> None:  # noqa: D105
        if min(self.major, self.minor, 0 if self.patch is None else self.patch) < 0:
            msg = f"Version components must not be negative: {self.major}.{self.minor}.{self.patch}"
            raise ValidationError(msg)

    @property
    def sort_key(self) -> tuple[int, int, int]:  # noqa: D102
        return self.major, self.minor, -1 if self.patch is None else self.patch

    def __lt__(self, other: object) -> bool:  # noqa: D105
        if not isinstance(other, VersionInfo):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self) -> str:  # noqa: D105
        return f"v{self.dotted}"

    @property
    def dotted(self) -> str:
        """Return the version as 'major.minor[.patch]'."""
        if self.patch is None:
            return f"{self.major}.{self.minor}"
        return f"{self.major}.{self.minor}.{self.patch}"

    @staticmethod
    def parse(text: str) -> VersionInfo:
        """
        Parse '1.36.1', 'v1.33.0' or '1.7' into a VersionInfo.

        Raises
        ------
            InputError: If the text is not a dotted version.

        """
        match = VERSION_PATTERN.fullmatch(text.strip())
        if match is None:
            msg = f"Not a version string: '{text}'"
            raise InputError(msg)
        major, minor, patch = match.groups()
        raw = text.strip().removeprefix("v")
        return VersionInfo(int(major), int(minor), None if patch is None else int(patch), raw)


@dataclass(frozen=True)
class TargetBinary:  # noqa: D101
    path: Path
    content_hash: str
    arch: Arch
    size_bytes: int
    machine: int | None = None
    component: str | None = None
    version: VersionInfo | None = None

    def __post_init__(self) -> None:  # noqa: D105
        if self.version is not None and self.component is None:
            msg = f"Target '{self.path}' has a version but no component"
            raise ValidationError(msg)
        if self.size_bytes < 0:
            msg = f"Target '{self.path}' has a negative size"
            raise ValidationError(msg)

    @property
    def arch_label(self) -> str:  # noqa: D102
        return arch_label(self.arch, self.machine)

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON form used by reports and batch files."""
        return {
            "path": str(self.path),
            "content_hash": self.content_hash,
            "arch": self.arch_label,
            "machine": self.machine,
            "component": self.component,
            "version": self.version.dotted if self.version else None,
            "size_bytes": self.size_bytes,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> TargetBinary:  # noqa: D102
        version = data.get("version")
        return TargetBinary(
            path=Path(data["path"]),
            content_hash=data["content_hash"],
            arch=Arch.from_label(data.get("arch", Arch.UNKNOWN.value)),
            size_bytes=int(data.get("size_bytes", 0)),
            machine=data.get("machine"),
            component=data.get("component"),
            version=VersionInfo.parse(version) if version else None,
        )


@dataclass(frozen=True)
class ScanDiagnostic:
    """A file the scanner could not read, with the reason."""

    path: Path
    reason: str


@dataclass(frozen=True)
class VersionRow:
    """
    One row of the version inventory.

    `count` counts files, `unique_count` counts distinct content hashes within the group.
    """

    component: str
    version: VersionInfo | None
    count: int
    unique_count: int

    @property
    def version_label(self) -> str:  # noqa: D102
        return str(self.version) if self.version else UNKNOWN_LABEL


@dataclass(frozen=True)
class VersionTable:
    """Per-(component, version) counts, sorted by version with the unknown group last."""

    rows: tuple[VersionRow, ...] = ()

    columns = ("component", "version", "count", "unique_count")

    def as_rows(self) -> list[tuple[Any, ...]]:  # noqa: D102
        return [(row.component, row.version_label, row.count, row.unique_count) for row in self.rows]

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {"rows": [dict(zip(self.columns, row, strict=True)) for row in self.as_rows()]}
