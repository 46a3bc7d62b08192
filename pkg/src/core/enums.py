from __future__ import annotations

import platform
import re
import signal
from dataclasses import dataclass
from enum import Enum

from src.core.constants import ELF_MACHINE_ARM, ELF_MACHINE_X86_64
from src.core.errors import UnknownArchError, UnknownSignalError, UnsupportedFormatError


class Arch(Enum):
    """
    CPU architecture of a target binary, as read from the ELF header machine field.

    Only the two architectures met in extracted firmware are named; anything else is UNKNOWN and the raw
    machine code travels next to it on the owning object.
    """

    X86_64 = "x86_64"
    ARM_32 = "arm32"
    UNKNOWN = "unknown"

    @staticmethod
    def from_machine(machine: int) -> Arch:
        """
        Map an ELF `e_machine` value to an Arch.

        Args:
        ----
            machine (int): The raw machine code.

        Returns:
        -------
            Arch: ARM_32 for 40, X86_64 for 62, UNKNOWN otherwise.

        """
        return {ELF_MACHINE_ARM: Arch.ARM_32, ELF_MACHINE_X86_64: Arch.X86_64}.get(machine, Arch.UNKNOWN)

    @staticmethod
    def from_label(label: str) -> Arch:
        """Parse an arch label such as 'arm32', 'ARM_32' or 'UNKNOWN(8)'."""
        normalized = label.strip().lower().replace("_", "")
        for arch in Arch:
            if normalized in (arch.value.replace("_", ""), arch.name.lower().replace("_", "")):
                return arch
        if normalized.startswith("unknown"):
            return Arch.UNKNOWN
        raise UnknownArchError(label)

    @staticmethod
    def host() -> Arch:
        """Return the architecture of the machine running the toolkit."""
        machine = platform.machine().lower()
        if machine in ("x86_64", "amd64"):
            return Arch.X86_64
        if machine.startswith("arm") and not machine.startswith("arm64"):
            return Arch.ARM_32
        return Arch.UNKNOWN

    @property
    def qemu_name(self) -> str | None:
        """Name suffix of the user-mode emulator binary for this architecture."""
        return {Arch.ARM_32: "arm", Arch.X86_64: "x86_64"}.get(self)


def arch_label(arch: Arch, machine: int | None) -> str:
    """Render an arch the way reports and the store index spell it, e.g. 'UNKNOWN(8)'."""
    if arch is Arch.UNKNOWN:
        return f"UNKNOWN({machine})" if machine is not None else "UNKNOWN"
    return arch.name


_SIGNAL_IN_FILE_NAME = re.compile(r"sig:(\d+)")

_CRASH_SIGNAL_LABELS = {
    signal.SIGSEGV: "SEGV",
    signal.SIGABRT: "ABRT",
    signal.SIGBUS: "BUS",
    signal.SIGFPE: "FPE",
    signal.SIGILL: "ILL",
}


@dataclass(frozen=True, order=True)
class CrashSignal:
    """
    Terminating signal of a crashed process.

    SEGV, ABRT, BUS, FPE and ILL are the crash signals; every other number is kept as OTHER(code).
    """

    number: int

    @property
    def label(self) -> str:  # noqa: D102
        return _CRASH_SIGNAL_LABELS.get(self.number, f"OTHER({self.number})")

    @property
    def is_crash(self) -> bool:  # noqa: D102
        return self.number in _CRASH_SIGNAL_LABELS

    def __str__(self) -> str:  # noqa: D105
        return self.label

    @staticmethod
    def from_crash_file_name(name: str) -> CrashSignal | None:
        """Read the `sig:NN` field fuzzers put in crash file names, e.g. `id:000003,sig:11,src:000001`."""
        match = _SIGNAL_IN_FILE_NAME.search(name)
        return CrashSignal(int(match.group(1))) if match else None

    @staticmethod
    def from_label(label: str) -> CrashSignal:
        """
        Parse 'SEGV', 'SIGSEGV', 'OTHER(7)' or a bare number.

        Raises
        ------
            UnknownSignalError: If the label names no signal.

        """
        text = label.strip().upper()
        if text.isdigit():
            return CrashSignal(int(text))
        if text.startswith("OTHER(") and text.endswith(")") and text[6:-1].isdigit():
            return CrashSignal(int(text[6:-1]))
        name = text.removeprefix("SIG")
        for number, crash_label in _CRASH_SIGNAL_LABELS.items():
            if crash_label == name:
                return CrashSignal(int(number))
        try:
            return CrashSignal(int(signal.Signals[f"SIG{name}"]))
        except KeyError as key_error:
            raise UnknownSignalError(label) from key_error


SEGV = CrashSignal(int(signal.SIGSEGV))
ABRT = CrashSignal(int(signal.SIGABRT))
BUS = CrashSignal(int(signal.SIGBUS))
FPE = CrashSignal(int(signal.SIGFPE))
ILL = CrashSignal(int(signal.SIGILL))


class SeedOrigin(Enum):  # noqa: D101
    LLM = "llm"
    RANDOM = "random"
    CRASH_IMPORT = "crash_import"


class Discovery(Enum):  # noqa: D101
    FUZZING = "fuzzing"
    REUSE = "reuse"


class CampaignStatus(Enum):  # noqa: D101
    COMPLETED = "completed"
    FAILED = "failed"
    CATASTROPHIC = "catastrophic"


class ReportFormat(Enum):
    """Output formats accepted by the report emitter."""

    CSV = "csv"
    JSON = "json"
    GNUPLOT = "gnuplot"

    @staticmethod
    def from_string(label: str) -> ReportFormat:
        """
        Convert a format tag to ReportFormat.

        Raises
        ------
            UnsupportedFormatError: If the tag is not a known format.

        """
        try:
            return ReportFormat(label.strip().lower())
        except ValueError as value_error:
            raise UnsupportedFormatError(label) from value_error


