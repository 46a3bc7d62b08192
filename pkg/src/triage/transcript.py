from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import PurePosixPath

from src.core.enums import CrashSignal
from src.core.errors import UnknownSignalError
from src.triage.models import UNKNOWN_MODULE, Frame

_SIGNAL_LINE = re.compile(r"Program (?:received|terminated with) signal (SIG[A-Z0-9]+)")
_FRAME_LINE = re.compile(r"^#(\d+)\s+(?:0x([0-9a-fA-F]+)\s+in\s+)?(\S+)\s*\(")
_FROM_MODULE = re.compile(r"\)\s+from\s+(\S+)\s*$")
_FAULT_ADDRESS = re.compile(r"^\$\d+\s*=\s*\(void \*\)\s*0x([0-9a-fA-F]+)", re.MULTILINE)
_MAPPING_LINE = re.compile(
    r"^\s*0x([0-9a-fA-F]+)\s+0x([0-9a-fA-F]+)\s+0x[0-9a-fA-F]+\s+0x([0-9a-fA-F]+)\s+(?:[-rwxps]{4}\s+)?(\S.*?)\s*$")
_UNRESOLVED_SYMBOL = "??"


@dataclass(frozen=True)
class Mapping:
    """One `info proc mappings` row."""

    start: int
    end: int
    file_offset: int
    objfile: str

    @property
    def module(self) -> str:  # noqa: D102
        return PurePosixPath(self.objfile).name or self.objfile


@dataclass
class ParsedTranscript:  # noqa: D101
    signal: CrashSignal | None = None
    fault_address: int | None = None
    frames: list[Frame] = field(default_factory=list)
    mappings: list[Mapping] = field(default_factory=list)
    exited_normally: bool = False

    def module_at(self, address: int) -> tuple[str, int] | None:
        """Resolve an absolute address to (module, module-relative offset) through the memory map."""
        for mapping in self.mappings:
            if mapping.start <= address < mapping.end:
                return mapping.module, address - mapping.start + mapping.file_offset
        return None


def _parse_signal(text: str) -> CrashSignal | None:
    match = _SIGNAL_LINE.search(text)
    if match is None:
        return None
    try:
        return CrashSignal.from_label(match.group(1))
    except UnknownSignalError:
        return None


def parse_transcript(text: str) -> ParsedTranscript:
    """
    Parse a batch-mode debugger transcript.

    Understood parts: the `Program received signal SIGxxx` line, backtrace frames
    (`#N 0xADDR in SYMBOL (...)`, `#N SYMBOL (...)` for frames without an address, `?? ()` for
    unresolved symbols, an optional `from /path/lib.so` suffix), the fault address printed as
    `$N = (void *) 0xADDR`, and the rows of `info proc mappings`.

    Only the first backtrace in the transcript is used. Frames whose symbol is unresolved get a
    module-relative offset from the memory map; without a matching mapping the raw address is kept
    as the offset of module `??`.
    """
    transcript = ParsedTranscript(signal=_parse_signal(text))
    transcript.exited_normally = "exited normally" in text or "exited with code" in text
    fault_match = _FAULT_ADDRESS.search(text)
    if fault_match:
        transcript.fault_address = int(fault_match.group(1), 16)
    for line in text.splitlines():
        mapping_match = _MAPPING_LINE.match(line)
        if mapping_match:
            start, end, offset, objfile = mapping_match.groups()
            transcript.mappings.append(Mapping(int(start, 16), int(end, 16), int(offset, 16), objfile))

    raw_frames: list[tuple[int | None, str, str | None]] = []
    expected_number = 0
    for line in text.splitlines():
        frame_match = _FRAME_LINE.match(line.strip())
        if frame_match is None:
            continue
        number = int(frame_match.group(1))
        if number != expected_number:
            if raw_frames:
                break
            continue
        expected_number += 1
        address = int(frame_match.group(2), 16) if frame_match.group(2) else None
        from_match = _FROM_MODULE.search(line)
        raw_frames.append((address, frame_match.group(3), from_match.group(1) if from_match else None))

    for address, symbol, from_module in raw_frames:
        resolved = transcript.module_at(address) if address is not None else None
        module = resolved[0] if resolved else (PurePosixPath(from_module).name if from_module else UNKNOWN_MODULE)
        if symbol != _UNRESOLVED_SYMBOL:
            transcript.frames.append(Frame(module, symbol, 0))
        elif resolved:
            transcript.frames.append(Frame(module, None, resolved[1]))
        else:
            transcript.frames.append(Frame(module, None, address or 0))
    return transcript
