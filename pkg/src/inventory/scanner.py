from __future__ import annotations

import logging
import os
import re
from collections import defaultdict
from pathlib import Path
from typing import TYPE_CHECKING

from src.core.constants import BUSYBOX_COMPONENT, BUSYBOX_VERSION_MARKER, PRINTABLE_RUN_MIN_LENGTH
from src.core.enums import Arch
from src.core.errors import InputError
from src.inventory.elf import ELF_HEADER_SIZE, is_elf, read_machine
from src.inventory.fingerprint import fingerprint
from src.inventory.models import ScanDiagnostic, TargetBinary, VersionInfo, VersionRow, VersionTable

if TYPE_CHECKING:
    from collections.abc import Iterator

logger = logging.getLogger(__name__)

# Printable ASCII plus tab, the character set of the classic `strings` tool.
PRINTABLE_RUN_PATTERN = re.compile(rb"[\t\x20-\x7e]{%d,}" % PRINTABLE_RUN_MIN_LENGTH)
BUSYBOX_VERSION_PATTERN = re.compile(re.escape(BUSYBOX_VERSION_MARKER) + rb"(\d+\.\d+(?:\.\d+)?)")

DEFAULT_MAX_DEPTH = 32


def printable_runs(file_bytes: bytes) -> Iterator[bytes]:
    """Yield the printable character runs of at least four bytes, in file order."""
    for match in PRINTABLE_RUN_PATTERN.finditer(file_bytes):
        yield match.group()


def extract_version(file_bytes: bytes) -> tuple[str, VersionInfo] | None:
    """
    Find the first 'BusyBox vX.Y[.Z]' string in a binary.

    The search runs over printable runs the way `strings $file | grep 'BusyBox v'` does,
    and the first occurrence in file order wins.

    Args:
    ----
        file_bytes (bytes): The whole file content.

    Returns:
    -------
        tuple[str, VersionInfo] | None: ("busybox", version) or None if no marker is present.

    Example:
    -------
        >>> extract_version(b"\\x00BusyBox v1.36.1 (2023-06-11)\\x00")
        ('busybox', VersionInfo(major=1, minor=36, patch=1, raw='1.36.1'))

    """
    for run in printable_runs(file_bytes):
        match = BUSYBOX_VERSION_PATTERN.search(run)
        if match:
            return BUSYBOX_COMPONENT, VersionInfo.parse(match.group(1).decode("ascii"))
    return None


def describe_binary(path: Path, file_bytes: bytes) -> TargetBinary:
    """Build a TargetBinary from an ELF file's path and content."""
    machine = read_machine(file_bytes[:ELF_HEADER_SIZE])
    component, version = extract_version(file_bytes) or (None, None)
    return TargetBinary(
        path=path,
        content_hash=fingerprint(file_bytes),
        arch=Arch.UNKNOWN if machine is None else Arch.from_machine(machine),
        machine=machine,
        size_bytes=len(file_bytes),
        component=component,
        version=version,
    )


def scan_filesystem(root: str | Path, max_depth: int = DEFAULT_MAX_DEPTH,
                    diagnostics: list[ScanDiagnostic] | None = None) -> list[TargetBinary]:
    """
    Scan an extracted firmware tree for ELF binaries.

    Symlinks are never followed and non-ELF files are skipped silently.
    A file that cannot be read is skipped and reported in `diagnostics` when a list is given.

    Args:
    ----
        root (str | Path): The directory to scan.
        max_depth (int): How many directory levels below `root` to descend (0 scans only `root` itself).
        diagnostics (list[ScanDiagnostic] | None): Receives one entry per unreadable file.

    Returns:
    -------
        list[TargetBinary]: One entry per ELF file, sorted by path.

    Raises:
    ------
        InputError: If `root` does not exist or is not a readable directory.

    """
    root_path = Path(root)
    if not root_path.is_dir() or not os.access(root_path, os.R_OK | os.X_OK):
        msg = f"'{root_path}' is not a readable directory."
        raise InputError(msg)
    if diagnostics is None:
        diagnostics = []

    def on_walk_error(error: OSError) -> None:
        diagnostics.append(ScanDiagnostic(Path(error.filename or root_path), error.strerror or str(error)))

    targets = []
    for current_dir, dir_names, file_names in os.walk(root_path, followlinks=False, onerror=on_walk_error):
        depth = len(Path(current_dir).relative_to(root_path).parts)
        if depth >= max_depth:
            dir_names.clear()
        dir_names.sort()
        for file_name in sorted(file_names):
            file_path = Path(current_dir) / file_name
            if file_path.is_symlink() or not file_path.is_file():
                continue
            try:
                with file_path.open("rb") as fp:
                    if not is_elf(fp.read(4)):
                        continue
                    fp.seek(0)
                    file_bytes = fp.read()
            except OSError as os_error:
                logger.debug("Skipping unreadable file '%s': %s", file_path, os_error)
                diagnostics.append(ScanDiagnostic(file_path, os_error.strerror or str(os_error)))
                continue
            targets.append(describe_binary(file_path, file_bytes))
    targets.sort(key=lambda target: str(target.path))
    logger.debug("Found %d ELF binaries under '%s'", len(targets), root_path)
    return targets


def inventory_report(targets: list[TargetBinary]) -> VersionTable:
    """
    Group targets by (component, version) and count them.

    Rows are sorted by version order; targets without a version form a single 'unknown' row at the end.
    Each row carries both the per-file count and the number of distinct content hashes.
    """
    groups: dict[tuple[str, VersionInfo | None], list[TargetBinary]] = defaultdict(list)
    for target in targets:
        if target.version is None:
            groups["unknown", None].append(target)
        else:
            groups[target.component, target.version].append(target)

    def row_order(key: tuple[str, VersionInfo | None]) -> tuple:
        component, version = key
        return (version is None, version.sort_key if version else (), component)

    rows = [
        VersionRow(component, version, len(members), len({member.content_hash for member in members}))
        for (component, version), members in sorted(groups.items(), key=lambda item: row_order(item[0]))
    ]
    return VersionTable(tuple(rows))
