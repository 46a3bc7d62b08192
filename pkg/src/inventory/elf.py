from __future__ import annotations

from elftools.common.exceptions import ELFError
from elftools.construct.core import ConstructError
from elftools.elf.enums import ENUM_E_MACHINE
from elftools.elf.structs import ELFStructs

from src.core.constants import ELF_MAGIC

# Large enough for the 64-bit ELF header; the 32-bit one is 52 bytes.
ELF_HEADER_SIZE = 64

_ELF_CLASSES = {1: 32, 2: 64}
_ELF_DATA_LITTLE_ENDIAN = {1: True, 2: False}


def is_elf(header: bytes) -> bool:
    """Check the first four bytes for the ELF magic 0x7F 'E' 'L' 'F'."""
    return header[:4] == ELF_MAGIC


def read_machine(header: bytes) -> int | None:
    """
    Return the raw `e_machine` code of an ELF header, or None when the header is truncated or malformed.

    Only the file header is decoded, so binaries with damaged section tables (common in extracted
    firmware) still report their machine.

    Args:
    ----
        header (bytes): At least the first 52 (32-bit) or 64 (64-bit) bytes of the file.

    """
    if not is_elf(header) or len(header) < 6:  # noqa: PLR2004
        return None
    elf_class = _ELF_CLASSES.get(header[4])
    little_endian = _ELF_DATA_LITTLE_ENDIAN.get(header[5])
    if elf_class is None or little_endian is None:
        return None
    structs = ELFStructs(little_endian=little_endian, elfclass=elf_class)
    structs.create_basic_structs()
    try:
        elf_header = structs.Elf_Ehdr.parse(header)
    except (ConstructError, ELFError):
        return None
    machine = elf_header["e_machine"]
    if isinstance(machine, str):
        return ENUM_E_MACHINE.get(machine)
    return int(machine)
