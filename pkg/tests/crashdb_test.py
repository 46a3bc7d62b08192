import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest
from pytest import param as test_data  # noqa: PT013

from src.core.enums import ABRT, SEGV, Arch, CrashSignal, Discovery
from src.core.errors import InputError, StoreError, ValidationError
from src.crashdb.models import CrashFilter, CrashMetadata, CrashSignature
from src.crashdb.store import CrashStore, record_id_for, unique_groups
from src.inventory.fingerprint import fingerprint, short_digest
from src.inventory.models import VersionInfo
from src.inventory.scanner import describe_binary
from tests.utils.elf_fixtures import EM_ARM, build_elf, busybox_payload

COMPONENTS = ("busybox", "dropbear")
APPLETS = ("awk", "dc", "man", "ash")
VERSIONS = (None, VersionInfo(1, 7, 2), VersionInfo(1, 22, 1), VersionInfo(1, 33, 0), VersionInfo(1, 36, 0))
AWK_VERSION = VersionInfo(1, 22, 1)


def signature(name: str, crash_signal: CrashSignal = SEGV) -> CrashSignature:
    return CrashSignature(crash_signal, short_digest(name.encode(), 16), top_frame=name)


def metadata(applet: str = "awk", version: VersionInfo | None = AWK_VERSION, target_hash: str = "t1",
             discovery: Discovery = Discovery.FUZZING, arch: Arch = Arch.ARM_32) -> CrashMetadata:
    return CrashMetadata(component="busybox", applet=applet, source_target_hash=fingerprint(target_hash.encode()),
                         source_arch=arch, discovery=discovery, signal=SEGV, source_version=version)


def random_metadata(rng: random.Random) -> CrashMetadata:
    arch = rng.choice(list(Arch))
    return CrashMetadata(
        component=rng.choice(COMPONENTS),
        applet=rng.choice(APPLETS),
        source_target_hash=fingerprint(rng.randbytes(8)),
        source_arch=arch,
        discovery=rng.choice(list(Discovery)),
        signal=rng.choice((SEGV, ABRT, CrashSignal(7))),
        source_version=rng.choice(VERSIONS),
        source_machine=8 if arch is Arch.UNKNOWN else None,
        signature=signature(rng.choice(APPLETS)) if rng.random() < 0.5 else None,
    )


@pytest.fixture
def store(tmp_path: Path) -> CrashStore:
    return CrashStore(tmp_path / "crashdb")


@pytest.mark.unit
def test_thousand_records_survive_reopening_and_reinsert_is_idempotent(tmp_path: Path):
    # Arrange: 1000 random inputs with random provenance
    rng = random.Random(1000)
    started = time.monotonic()
    first = CrashStore(tmp_path / "crashdb")
    inserted = {}
    for index in range(1000):
        input_bytes = index.to_bytes(2, "big") + rng.randbytes(rng.randint(1, 256))
        crash_metadata = random_metadata(rng)
        inserted[first.insert(input_bytes, crash_metadata)] = (input_bytes, crash_metadata)
    index_size = first.index_path.stat().st_size
    # Act: reopen the store from disk
    reopened = CrashStore(tmp_path / "crashdb")
    records = reopened.query()
    # Assert: every record and blob comes back exactly
    assert len(records) == 1000
    for record in records:
        input_bytes, crash_metadata = inserted[record.record_id]
        assert reopened.get_blob(record.input_hash) == input_bytes
        assert record.input_len == len(input_bytes)
        assert (record.component, record.applet, record.discovery, record.signal) == (
            crash_metadata.component, crash_metadata.applet, crash_metadata.discovery, crash_metadata.signal)
        assert record.source_arch is crash_metadata.source_arch
        assert record.source_version == crash_metadata.source_version
        assert record.source_target_hash == crash_metadata.source_target_hash
        assert record.signature == crash_metadata.signature
    stats_before = reopened.stats()
    for record_id, (input_bytes, crash_metadata) in inserted.items():
        assert reopened.insert(input_bytes, crash_metadata) == record_id
    assert reopened.stats() == stats_before
    assert reopened.index_path.stat().st_size == index_size
    assert time.monotonic() - started < 30


@pytest.mark.unit
def test_same_input_on_two_targets_is_two_records_and_one_blob(store: CrashStore):
    # Act: perform method under test
    first_id = store.insert(b"BOOM", metadata(target_hash="t1"))
    second_id = store.insert(b"BOOM", metadata(target_hash="t2"))
    # Assert: check the ids and the counts
    assert first_id != second_id
    assert first_id == record_id_for(fingerprint(b"BOOM"), fingerprint(b"t1"))
    assert store.stats().to_dict() == {"records": 2, "blobs": 1, "signed": 0, "unsigned": 2, "unique_signatures": 0}
    assert [blob.name for blob in store.blobs_dir.iterdir()] == [fingerprint(b"BOOM")]


@pytest.mark.unit
@pytest.mark.parametrize(
    ("input_bytes", "crash_metadata"),
    [
        test_data(b"", metadata(), id="empty-input"),
        test_data(b"x", CrashMetadata("", "awk", "t", Arch.ARM_32, Discovery.FUZZING, SEGV), id="no-component"),
        test_data(b"x", CrashMetadata("busybox", "", "t", Arch.ARM_32, Discovery.FUZZING, SEGV), id="no-applet"),
    ],
)
def test_invalid_insert_raises_validation_error(store: CrashStore, input_bytes: bytes,
                                                crash_metadata: CrashMetadata):
    # Act & Assert: check the raised error and that nothing was written
    with pytest.raises(ValidationError):
        store.insert(input_bytes, crash_metadata)
    assert len(store) == 0


@pytest.mark.unit
def test_attach_signature_is_persisted_once(tmp_path: Path, store: CrashStore):
    # Arrange: one unsigned record
    record_id = store.insert(b"BOOM", metadata())
    # Act: perform method under test
    record = store.attach_signature(record_id, signature("toy_word_lookup"))
    lines_after_first = store.index_path.read_text().count("\n")
    store.attach_signature(record_id, signature("toy_word_lookup"))
    # Assert: check the record, the reopened store and that the repeat wrote nothing
    assert record.signature == signature("toy_word_lookup")
    assert CrashStore(tmp_path / "crashdb").get(record_id).signature.top_frame == "toy_word_lookup"
    assert store.index_path.read_text().count("\n") == lines_after_first
    with pytest.raises(StoreError, match="already has signature"):
        store.attach_signature(record_id, signature("other_frame"))


@pytest.mark.unit
def test_attach_signature_to_unknown_record_raises_input_error(store: CrashStore):
    # Act & Assert: check the raised error
    with pytest.raises(InputError, match="No crash record"):
        store.attach_signature("0011223344556677", signature("main"))


@pytest.mark.unit
@pytest.mark.parametrize(
    ("crash_filter", "expected_inputs"),
    [
        test_data(CrashFilter(), [b"a1", b"a2", b"d1", b"m1", b"n1"], id="everything"),
        test_data(CrashFilter(applet="awk"), [b"a1", b"a2"], id="applet"),
        test_data(CrashFilter(component="dropbear"), [], id="component"),
        test_data(CrashFilter(version_range=(VersionInfo(1, 22, 0), VersionInfo(1, 36, 0))), [b"a2", b"d1"],
                  id="half-open-version-range"),
        test_data(CrashFilter(version_range=(VersionInfo(1, 0), VersionInfo(2, 0))), [b"a1", b"a2", b"d1", b"m1"],
                  id="range-skips-unversioned"),
        test_data(CrashFilter(arch=Arch.X86_64), [b"m1"], id="arch"),
        test_data(CrashFilter(discovery=Discovery.REUSE), [b"d1"], id="discovery"),
        test_data(CrashFilter(applet="awk", discovery=Discovery.REUSE), [], id="conjunction"),
    ],
)
def test_query_filters(store: CrashStore, crash_filter: CrashFilter, expected_inputs: list[bytes]):
    # Arrange: records across applets, versions, arches and discovery modes
    store.insert(b"a1", metadata("awk", VersionInfo(1, 7, 2)))
    store.insert(b"a2", metadata("awk", VersionInfo(1, 22, 1)))
    store.insert(b"d1", metadata("dc", VersionInfo(1, 33, 0), discovery=Discovery.REUSE))
    store.insert(b"m1", metadata("man", VersionInfo(1, 36, 0), arch=Arch.X86_64))
    store.insert(b"n1", metadata("ash", None))
    # Act: perform method under test
    records = store.query(crash_filter)
    # Assert: check the matched inputs in insertion order
    assert [store.get_blob(record.input_hash) for record in records] == expected_inputs


@pytest.mark.unit
def test_unique_groups_partition_by_signature(store: CrashStore):
    # Arrange: five records, four signed with two signatures
    ids = [store.insert(content, metadata()) for content in (b"1", b"2", b"3", b"4", b"5")]
    for record_id, name in zip(ids[:4], ("lookup", "parse", "lookup", "parse"), strict=True):
        store.attach_signature(record_id, signature(name))
    # Act: perform method under test
    groups, unsigned = unique_groups(store.query())
    # Assert: check the groups and the unsigned ids
    assert groups == {signature("lookup"): [ids[0], ids[2]], signature("parse"): [ids[1], ids[3]]}
    assert unsigned == [ids[4]]
    assert store.stats().unique_signatures == 2


@pytest.mark.unit
def test_signatures_differing_only_in_signal_are_distinct():
    # Act & Assert: the frame hash alone does not identify a bug
    assert signature("free") != signature("free", ABRT)
    assert signature("free").short_id.startswith("SEGV:")


@pytest.mark.unit
def test_invalid_frame_hash_raises_validation_error():
    # Act & Assert: check the raised error
    with pytest.raises(ValidationError, match="Frame hash"):
        CrashSignature(SEGV, "abc")


@pytest.mark.unit
def test_import_directory_reads_signals_and_skips_noise(store: CrashStore, tmp_path: Path):
    # Arrange: a fuzzer crashes directory
    target = describe_binary(Path("bin/busybox"), build_elf(EM_ARM, payload=busybox_payload("1.22.1")))
    crash_dir = tmp_path / "crashes"
    crash_dir.mkdir()
    (crash_dir / "README.txt").write_text("Command line used to find this crash")
    (crash_dir / ".hidden").write_bytes(b"x")
    (crash_dir / "id:000002,empty").write_bytes(b"")
    (crash_dir / "id:000000,sig:06,src:000000").write_bytes(b"FREE2")
    (crash_dir / "id:000001,src:000003").write_bytes(b"BOOM")
    # Act: perform method under test
    result = store.import_directory(crash_dir, target, "awk")
    # Assert: check the imported records
    assert sorted(result.skipped) == [".hidden", "README.txt", "id:000002,empty"]
    records = [store.get(record_id) for record_id in result.record_ids]
    assert [record.signal for record in records] == [ABRT, SEGV]
    assert {record.source_version for record in records} == {VersionInfo(1, 22, 1)}
    assert {record.source_arch for record in records} == {Arch.ARM_32}
    assert {record.discovery for record in records} == {Discovery.FUZZING}


@pytest.mark.unit
def test_import_of_missing_directory_raises_input_error(store: CrashStore, tmp_path: Path):
    # Arrange: any target
    target = describe_binary(Path("bin/busybox"), build_elf(EM_ARM))
    # Act & Assert: check the raised error
    with pytest.raises(InputError, match="does not exist"):
        store.import_directory(tmp_path / "absent", target, "awk")


@pytest.mark.unit
def test_malformed_index_lines_are_skipped(tmp_path: Path, store: CrashStore, caplog: pytest.LogCaptureFixture):
    # Arrange: one good record and one line of garbage in the index
    record_id = store.insert(b"BOOM", metadata())
    with store.index_path.open("a") as index_file:
        index_file.write("{this is not json\n")
    # Act: perform method under test
    with caplog.at_level(logging.WARNING):
        records = CrashStore(tmp_path / "crashdb").query()
    # Assert: check the records and the warning
    assert [record.record_id for record in records] == [record_id]
    assert "Skipping malformed index line 2" in caplog.text


@pytest.mark.unit
def test_reader_sees_records_written_by_another_handle(tmp_path: Path):
    # Arrange: two handles on the same store
    writer = CrashStore(tmp_path / "crashdb")
    reader = CrashStore(tmp_path / "crashdb")
    writer.insert(b"first", metadata())
    assert len(reader) == 1
    # Act: perform method under test
    writer.insert(b"second", metadata())
    # Assert: check that the reader picked up the appended line
    assert len(reader) == 2


@pytest.mark.unit
def test_concurrent_inserts_are_serialized(store: CrashStore):
    # Arrange: inputs shared between workers so that some inserts race on the same key
    inputs = [f"input-{index % 150}".encode() for index in range(400)]
    # Act: perform method under test
    with ThreadPoolExecutor(max_workers=8) as executor:
        ids = list(executor.map(lambda content: store.insert(content, metadata()), inputs))
    # Assert: one record per distinct input, one index line per record
    assert len(set(ids)) == 150
    assert len(store) == 150
    assert store.index_path.read_text().count("\n") == 150


@pytest.mark.unit
def test_missing_blob_raises_store_error(store: CrashStore):
    # Act & Assert: check the raised error
    with pytest.raises(StoreError, match="Missing crash blob"):
        store.get_blob(fingerprint(b"never stored"))
