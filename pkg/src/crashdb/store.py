from __future__ import annotations

import fcntl
import json
import logging
import os
import threading
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import TYPE_CHECKING, Any

from src.core.constants import ENCODING_UTF_8, STORE_BLOBS_DIR, STORE_INDEX_FILE, STORE_LOCK_FILE
from src.core.enums import SEGV, CrashSignal, Discovery
from src.core.errors import InputError, StoreError, ValidationError
from src.crashdb.models import CrashFilter, CrashMetadata, CrashRecord, CrashSignature, StoreStats
from src.inventory.fingerprint import fingerprint, short_digest

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator  # pragma: no cover

    from src.inventory.models import TargetBinary  # pragma: no cover

logger = logging.getLogger(__name__)

RECORD_ENTRY = "record"
SIGNATURE_ENTRY = "signature"
RECORD_ID_BYTES = 8


def record_id_for(input_hash: str, source_target_hash: str) -> str:
    """Derive the record id from the store's uniqueness key."""
    return short_digest(f"{input_hash}:{source_target_hash}".encode(), RECORD_ID_BYTES)


def unique_groups(records: Iterable[CrashRecord]) -> tuple[dict[CrashSignature, list[str]], list[str]]:
    """
    Partition records by signature.

    Returns
    -------
        tuple: The signature groups (signature to record ids, in record order) and the ids of unsigned records.
        The number of groups is the unique crash count.

    """
    groups: dict[CrashSignature, list[str]] = defaultdict(list)
    unsigned = []
    for record in records:
        if record.signature is None:
            unsigned.append(record.record_id)
        else:
            groups[record.signature].append(record.record_id)
    return dict(groups), unsigned


@dataclass
class ImportResult:
    """Outcome of a bulk import: ids of inserted (or already present) records and skipped file names."""

    record_ids: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


class CrashStore:
    """
    Content-addressed store of crashing inputs.

    On disk: `blobs/<input hash>` holds the raw input bytes and `index.jsonl` is an append-only log of
    record entries and signature entries. The uniqueness key is (input hash, source target hash).
    Writers serialize through a per-store lock (a thread lock plus an exclusive `flock` on `.lock`);
    readers pick up the index lines appended since their last read and never take the writer lock.

    Example:
    -------
    >>> store = CrashStore("/tmp/crashes")
    >>> record_id = store.insert(b"BOOM", metadata)
    >>> store.insert(b"BOOM", metadata) == record_id
    True

    """

    def __init__(self, path: str | Path) -> None:  # noqa: D107
        self.path = Path(path)
        self.blobs_dir = self.path / STORE_BLOBS_DIR
        self.index_path = self.path / STORE_INDEX_FILE
        self._thread_lock = threading.Lock()
        self._read_lock = threading.Lock()
        self._records: dict[str, CrashRecord] = {}
        self._index_offset = 0
        self._index_lines = 0
        try:
            self.blobs_dir.mkdir(parents=True, exist_ok=True)
            self.index_path.touch(exist_ok=True)
        except OSError as error:
            msg = f"Cannot open crash store at {self.path}: {error}"
            raise StoreError(msg) from error

    @contextmanager
    def _writer(self) -> Iterator[None]:
        with self._thread_lock:
            try:
                lock_file = (self.path / STORE_LOCK_FILE).open("a")
            except OSError as error:
                msg = f"Cannot lock crash store at {self.path}: {error}"
                raise StoreError(msg) from error
            with lock_file:
                fcntl.flock(lock_file.fileno(), fcntl.LOCK_EX)
                try:
                    yield
                finally:
                    fcntl.flock(lock_file.fileno(), fcntl.LOCK_UN)

    def _load(self) -> dict[str, CrashRecord]:
        """Return the records of the index, parsing only the lines appended since the previous call."""
        with self._read_lock:
            try:
                with self.index_path.open("rb") as index_file:
                    index_file.seek(0, os.SEEK_END)
                    if index_file.tell() < self._index_offset:
                        self._records, self._index_offset, self._index_lines = {}, 0, 0
                    index_file.seek(self._index_offset)
                    appended = index_file.read()
            except OSError as error:
                msg = f"Cannot read crash index {self.index_path}: {error}"
                raise StoreError(msg) from error
            complete = appended[:appended.rfind(b"\n") + 1]
            self._index_offset += len(complete)
            for line in complete.decode(ENCODING_UTF_8, errors="replace").splitlines():
                self._index_lines += 1
                if line.strip():
                    self._apply(line)
            return dict(self._records)

    def _apply(self, line: str) -> None:
        records = self._records
        try:
            entry = json.loads(line)
            if entry["kind"] == RECORD_ENTRY:
                record = CrashRecord.from_dict(entry["record"])
                records.setdefault(record.record_id, record)
            elif entry["kind"] == SIGNATURE_ENTRY and entry["record_id"] in records:
                record = records[entry["record_id"]]
                records[record.record_id] = record.with_signature(CrashSignature.from_dict(entry["signature"]))
        except (json.JSONDecodeError, KeyError, ValueError, InputError) as error:
            logger.warning("Skipping malformed index line %d in %s: %s", self._index_lines, self.index_path, error)

    def _append(self, entry: dict[str, Any]) -> None:
        line = json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n"
        with self.index_path.open("a", encoding=ENCODING_UTF_8) as index_file:
            index_file.write(line)
            index_file.flush()
            os.fsync(index_file.fileno())

    def _write_blob(self, input_hash: str, input_bytes: bytes) -> None:
        blob_path = self.blobs_dir / input_hash
        if blob_path.is_file():
            return
        temp_path = blob_path.with_suffix(".tmp")
        temp_path.write_bytes(input_bytes)
        temp_path.replace(blob_path)

    def insert(self, input_bytes: bytes, metadata: CrashMetadata) -> str:
        """
        Store a crashing input with its provenance.

        Re-inserting the same input for the same source target returns the existing id and writes nothing.

        Raises
        ------
            ValidationError: If the input is empty or the metadata lacks component or applet.
            StoreError: If the store cannot be written.

        """
        if not input_bytes:
            msg = "Crash input must not be empty."
            raise ValidationError(msg)
        if not metadata.component or not metadata.applet:
            msg = "Crash metadata needs both component and applet."
            raise ValidationError(msg)
        input_hash = fingerprint(input_bytes)
        record_id = record_id_for(input_hash, metadata.source_target_hash)
        with self._writer():
            if record_id in self._load():
                return record_id
            record = CrashRecord(
                record_id=record_id,
                input_hash=input_hash,
                input_len=len(input_bytes),
                component=metadata.component,
                applet=metadata.applet,
                source_target_hash=metadata.source_target_hash,
                source_version=metadata.source_version,
                source_arch=metadata.source_arch,
                source_machine=metadata.source_machine,
                discovery=metadata.discovery,
                signal=metadata.signal,
                signature=metadata.signature,
                recorded_at=datetime.now(UTC).isoformat(timespec="microseconds"),
            )
            try:
                self._write_blob(input_hash, input_bytes)
                self._append({"kind": RECORD_ENTRY, "record": record.to_dict()})
            except OSError as error:
                msg = f"Cannot write crash {record_id} to {self.path}: {error}"
                raise StoreError(msg) from error
        logger.debug("Stored crash %s (%s, %s/%s)", record_id, metadata.signal, metadata.component, metadata.applet)
        return record_id

    def attach_signature(self, record_id: str, signature: CrashSignature) -> CrashRecord:
        """
        Attach a triage signature to a record by appending a signature entry.

        A record takes exactly one signature; attaching an equal one again is a no-op.

        Raises
        ------
            InputError: If the record does not exist.
            StoreError: If the record already carries a different signature.

        """
        with self._writer():
            records = self._load()
            if record_id not in records:
                msg = f"No crash record '{record_id}' in {self.path}."
                raise InputError(msg)
            record = records[record_id]
            if record.signature is not None:
                if record.signature == signature:
                    return record
                msg = f"Crash record '{record_id}' already has signature {record.signature.short_id}."
                raise StoreError(msg)
            try:
                self._append({"kind": SIGNATURE_ENTRY, "record_id": record_id,
                              "signature": signature.to_dict()})
            except OSError as error:
                msg = f"Cannot write signature for {record_id}: {error}"
                raise StoreError(msg) from error
        return record.with_signature(signature)

    def query(self, crash_filter: CrashFilter | None = None) -> list[CrashRecord]:
        """Return matching records ordered by (recorded_at, input_hash)."""
        crash_filter = crash_filter or CrashFilter()
        records = [record for record in self._load().values() if crash_filter.matches(record)]
        return sorted(records, key=lambda record: (record.recorded_at, record.input_hash, record.record_id))

    def get(self, record_id: str) -> CrashRecord | None:  # noqa: D102
        return self._load().get(record_id)

    def get_blob(self, input_hash: str) -> bytes:
        """Return the stored bytes of an input, bit-exact."""
        try:
            return (self.blobs_dir / input_hash).read_bytes()
        except OSError as error:
            msg = f"Missing crash blob {input_hash} in {self.path}"
            raise StoreError(msg) from error

    def stats(self) -> StoreStats:  # noqa: D102
        records = list(self._load().values())
        groups, unsigned = unique_groups(records)
        return StoreStats(
            records=len(records),
            blobs=len({record.input_hash for record in records}),
            signed=len(records) - len(unsigned),
            unique_signatures=len(groups),
        )

    def __len__(self) -> int:  # noqa: D105
        return len(self._load())

    def import_directory(self, crash_dir: str | Path, target: TargetBinary, applet: str,
                         discovery: Discovery = Discovery.FUZZING, default_signal: CrashSignal = SEGV) -> ImportResult:
        """
        Bulk-import a fuzzer's `crashes/` directory as records found on `target`.

        The signal comes from the `sig:NN` field of each file name, else `default_signal`.
        README files, hidden files and empty files are skipped.
        """
        crash_path = Path(crash_dir)
        if not crash_path.is_dir():
            msg = f"Crash directory '{crash_path}' does not exist."
            raise InputError(msg)
        result = ImportResult()
        for path in sorted(crash_path.iterdir()):
            if not path.is_file() or path.name.startswith(("README", ".")) or path.stat().st_size == 0:
                result.skipped.append(path.name)
                continue
            signal = CrashSignal.from_crash_file_name(path.name) or default_signal
            metadata = CrashMetadata.for_target(target, applet, discovery, signal)
            result.record_ids.append(self.insert(path.read_bytes(), metadata))
        logger.info("Imported %d crashes from %s (%d skipped)", len(result.record_ids), crash_path,
                    len(result.skipped))
        return result
