from __future__ import annotations

import json
import logging.config
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click

from src import app_name, app_version, utils
from src.cache.cache_manager import CacheManager
from src.core.constants import DEFAULT_MINIMIZATION_STEPS, ENCODING_UTF_8
from src.core.enums import SEGV, Arch, Discovery, ReportFormat
from src.core.errors import FirmFuzzError, InputError, ToolEnvironmentError, ValidationError
from src.crashdb.models import CrashFilter, CrashMetadata
from src.crashdb.store import CrashStore
from src.fuzzing.adapters import AflPlusPlusAdapter, ScriptedFuzzerAdapter
from src.fuzzing.campaign import load_batch_file, run_batch
from src.fuzzing.execution import plan_execution
from src.fuzzing.models import ExecutionPlan, HarnessSpec
from src.inventory.models import TargetBinary, VersionInfo
from src.inventory.scanner import DEFAULT_MAX_DEPTH, describe_binary, inventory_report, scan_filesystem
from src.report.compare import compare_conditions, overlap
from src.report.emit import emit
from src.report.models import ConditionSeries
from src.reuse.screening import compare_with_fuzzing, screen_target, signatures_from_document
from src.seedgen.clients.chat_completions_client import ChatCompletionsClient
from src.seedgen.clients.fixture_client import FixtureProvider, RecordingProvider
from src.seedgen.corpus_io import write_corpus
from src.seedgen.generator import generate_llm_corpus, generate_random_corpus
from src.seedgen.minimizer import minimize_corpus
from src.seedgen.oracles import AflShowmapOracle
from src.triage.batch import triage_batch
from src.triage.debuggers import DebuggerAdapter, FixtureDebuggerAdapter, GdbDebuggerAdapter
from src.triage.minimizer import minimize_input

if TYPE_CHECKING:
    from collections.abc import Callable  # pragma: no cover

    from src.core.config import ToolConfig  # pragma: no cover
    from src.fuzzing.adapters.base import FuzzerAdapter  # pragma: no cover
    from src.report.models import Tabular  # pragma: no cover
    from src.triage.models import TriageReport  # pragma: no cover

logging.config.dictConfig(utils.get_logger_config_dict())
logger = logging.getLogger()


@dataclass
class AppContext:
    """Options shared by every command."""

    config: ToolConfig
    json_output: bool
    jobs: int

    def store(self, store_dir: str | None = None) -> CrashStore:  # noqa: D102
        return CrashStore(store_dir or self.config.store_dir)

    def cache(self, enabled: bool = True) -> CacheManager | None:  # noqa: D102, FBT001, FBT002
        return CacheManager(self.config.resolved_cache_dir) if enabled else None


def enable_debug_logs() -> None:
    """Switch the root logger to DEBUG."""
    logger.setLevel(logging.DEBUG)


def logs_option(command: Callable) -> Callable:
    """Add the per-command `--logs` switch."""
    return click.option("--logs", type=int, default=0, expose_value=False, is_eager=True,
                        callback=lambda _ctx, _param, value: enable_debug_logs() if value == 1 else None,
                        help="Enable debug logs (1 for enabled, 0 for disabled).")(command)


def echo_document(document: dict[str, Any] | list[Any]) -> None:
    """Print a JSON document on standard output."""
    click.echo(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False))


def echo_table(app: AppContext, table: Tabular, output_format: str | None) -> None:
    """Print a table as CSV (default), JSON (`--json`) or the requested format."""
    chosen = ReportFormat.JSON if app.json_output and output_format is None else output_format or ReportFormat.CSV
    click.echo(emit(table, chosen).decode(ENCODING_UTF_8), nl=False)


def load_target(path: str) -> TargetBinary:
    """Describe a binary given on the command line."""
    target_path = Path(path)
    try:
        return describe_binary(target_path, target_path.read_bytes())
    except OSError as os_error:
        msg = f"Cannot read target '{target_path}': {os_error}"
        raise InputError(msg) from os_error


def build_harness(config: ToolConfig, applet: str, timeout_ms: int | None) -> HarnessSpec:
    """Return the harness profile of an applet with the effective replay timeout."""
    harness = HarnessSpec.for_applet(applet, config.harness_profiles)
    if timeout_ms is not None:
        return harness.with_timeout(timeout_ms)
    if "timeout_ms" not in (config.harness_profiles.get(applet) or {}):
        return harness.with_timeout(config.replay_timeout_ms)
    return harness


def build_plan(config: ToolConfig, target: TargetBinary, harness: HarnessSpec,
               native: bool) -> ExecutionPlan:  # noqa: FBT001
    """Return how to run the target: forced native, or derived from the host and the configured sysroots."""
    if native:
        return ExecutionPlan.native(target.arch)
    return plan_execution(target, Arch.host(), harness.sysroot or config.sysroot_for(target.arch))


def build_debugger(debugger: str, transcript: str | None) -> DebuggerAdapter:
    """Return the debugger adapter chosen on the command line."""
    if transcript:
        return FixtureDebuggerAdapter.from_file(transcript)
    if debugger == "none":
        return FixtureDebuggerAdapter("", available=False)
    return GdbDebuggerAdapter()


def read_json_file(path: str) -> dict[str, Any]:  # noqa: D103
    try:
        return json.loads(Path(path).read_text(encoding=ENCODING_UTF_8))
    except (OSError, json.JSONDecodeError) as error:
        msg = f"Cannot read JSON document '{path}': {error}"
        raise InputError(msg) from error


def write_json_file(path: str | Path, document: dict[str, Any]) -> None:  # noqa: D103
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                           encoding=ENCODING_UTF_8)


def build_filter(component: str | None, applet: str | None, version_from: str | None, version_to: str | None,
                 arch: str | None, discovery: str | None) -> CrashFilter:
    """Build a crash filter from command options; a version range needs both bounds."""
    version_range = None
    if version_from or version_to:
        if not (version_from and version_to):
            msg = "--version-from and --version-to must be given together."
            raise click.UsageError(msg)
        version_range = (VersionInfo.parse(version_from), VersionInfo.parse(version_to))
    return CrashFilter(
        component=component,
        applet=applet,
        version_range=version_range,
        arch=Arch.from_label(arch) if arch else None,
        discovery=Discovery(discovery) if discovery else None,
    )


def print_triage_report(app: AppContext, report: TriageReport, minimized: dict[str, Any]) -> None:  # noqa: D103
    if app.json_output:
        echo_document({**report.to_dict(), "minimized": minimized})
        return
    click.echo(report.render_text(), nl=False)
    for short_id, result in minimized.items():
        click.echo(f"Minimized {short_id}: {result['original_len']} -> {result['minimized_len']} bytes "
                   f"in {result['steps']} executions")


@click.group()
@click.version_option(prog_name=app_name, version=app_version, message="%(prog)s %(version)s")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), help="YAML tool config.")
@click.option("--json", "json_output", is_flag=True, help="Print machine-readable JSON instead of text.")
@click.option("--jobs", type=click.IntRange(min=1), help="Maximum number of parallel workers.")
@click.option("--log-file", type=click.Path(dir_okay=False), is_flag=False, flag_value=utils.default_log_file_name(),
              help="Also write DEBUG logs to this file (firmfuzz-cli.log when no path is given).")
@logs_option
@click.pass_context
def cli(ctx: click.Context, config_file: str | None, json_output: bool, jobs: int | None,  # noqa: FBT001
        log_file: str | None) -> None:
    """
    Fuzzing-campaign toolkit for embedded Linux binaries: inventory firmware, generate seeds,
    run and supervise fuzzing campaigns, keep a crash database, screen new variants by crash reuse,
    triage crashes and emit comparison reports.
    """  # noqa: D205
    if log_file:
        level = logger.level
        logging.config.dictConfig(utils.get_logger_config_dict(log_file))
        logger.setLevel(level)
    config = utils.read_config_file(config_file)
    ctx.obj = AppContext(config=config, json_output=json_output, jobs=jobs or config.jobs)


@cli.command(help="Inventory the ELF binaries of an extracted firmware tree.")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--max-depth", type=click.IntRange(min=0), default=DEFAULT_MAX_DEPTH, help="Maximum directory depth.")
@click.option("--format", "output_format", type=click.Choice([item.value for item in ReportFormat]),
              help="Output format of the version table (csv by default).")
@logs_option
@click.pass_obj
def scan(app: AppContext, root: str, max_depth: int, output_format: str | None) -> None:  # noqa: D103
    diagnostics = []
    targets = scan_filesystem(root, max_depth=max_depth, diagnostics=diagnostics)
    for diagnostic in diagnostics:
        logger.warning("Skipped '%s': %s", diagnostic.path, diagnostic.reason)
    logger.info("Found %d ELF binaries under '%s'", len(targets), root)
    echo_table(app, inventory_report(targets), output_format)


@cli.command(help="Generate a seed corpus for an applet.")
@click.option("--applet", required=True, help="Applet name, e.g. awk.")
@click.option("--mode", type=click.Choice(["llm", "random"]), required=True, help="Seed source.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Corpus output directory.")
@click.option("--fixture", type=click.Path(exists=True, file_okay=False), help="Replay canned model responses.")
@click.option("--record", type=click.Path(file_okay=False), help="Save live model responses as fixtures.")
@click.option("--min-seeds", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--max-attempts", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--count", type=click.IntRange(min=1), default=10, show_default=True, help="Random seed count.")
@click.option("--min-len", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--max-len", type=click.IntRange(min=1), default=64, show_default=True)
@click.option("--rng-seed", type=int, default=0, show_default=True)
@click.option("--minimize", "minimize_target", type=click.Path(exists=True, dir_okay=False),
              help="Minimize the corpus by coverage on this target.")
@click.option("--native", is_flag=True, help="Run the minimization target directly on the host.")
@logs_option
@click.pass_obj
def seeds(app: AppContext, applet: str, mode: str, out_dir: str, fixture: str | None,  # noqa: D103, PLR0913
          record: str | None, min_seeds: int, max_attempts: int, count: int, min_len: int, max_len: int,
          rng_seed: int, minimize_target: str | None, native: bool) -> None:  # noqa: FBT001
    if mode == "llm":
        provider = FixtureProvider.from_directory(fixture) if fixture else ChatCompletionsClient(app.config.provider)
        if record:
            provider = RecordingProvider(provider, record)
        corpus = generate_llm_corpus(provider, applet, min_seeds, max_attempts)
    else:
        corpus = generate_random_corpus(count, min_len, max_len, rng_seed, applet)
    if minimize_target:
        target = load_target(minimize_target)
        harness = build_harness(app.config, applet, None)
        oracle = AflShowmapOracle(build_plan(app.config, target, harness, native), harness, target.path)
        corpus = minimize_corpus(corpus, oracle, app.jobs)
    write_corpus(corpus, out_dir)
    if app.json_output:
        echo_document({"out_dir": out_dir, "seeds": len(corpus), "metadata": corpus.generation_metadata})
    else:
        click.echo(f"Wrote {len(corpus)} seeds for '{applet}' to '{out_dir}'.")


def select_adapter(adapter: str, script: str | None) -> FuzzerAdapter:  # noqa: D103
    if adapter == "scripted":
        if not script:
            msg = "--script is required with --adapter scripted."
            raise click.UsageError(msg)
        return ScriptedFuzzerAdapter.from_file(script)
    return AflPlusPlusAdapter()


@cli.command(help="Run a batch of fuzzing campaigns and ingest their crashes into the store.")
@click.argument("batch_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--adapter", type=click.Choice(["afl", "scripted"]), default="afl", show_default=True)
@click.option("--script", type=click.Path(exists=True, dir_okay=False), help="Script for the scripted adapter.")
@click.option("--store", "store_dir", type=click.Path(file_okay=False), help="Crash store directory.")
@click.option("--component", help="Component recorded for targets without a detected one.")
@click.option("--no-ingest", is_flag=True, help="Do not insert harvested crashes into the store.")
@logs_option
@click.pass_obj
def fuzz(app: AppContext, batch_file: str, adapter: str, script: str | None, store_dir: str | None,  # noqa: D103, PLR0913
         component: str | None, no_ingest: bool) -> None:  # noqa: FBT001
    fuzzer = select_adapter(adapter, script)
    if not fuzzer.is_available():
        missing = f"fuzzer '{fuzzer.name}'"
        raise ToolEnvironmentError(missing, "install AFL++ with QEMU mode")
    configs = load_batch_file(batch_file, app.config.harness_profiles)
    results = run_batch(configs, fuzzer, app.jobs, app.config.dump_dir)
    store = None if no_ingest else app.store(store_dir)
    ingested = 0
    for config, result in zip(configs, results, strict=True):
        if store is None or not result.crash_inputs:
            continue
        target = config.target
        if not (target.component or component):
            logger.warning("Campaign %s: no component known for %s, crashes not ingested", result.campaign_id,
                           target.path)
            continue
        for content, signal in zip(result.crash_inputs, result.crash_signals, strict=True):
            metadata = CrashMetadata.for_target(target, config.applet, Discovery.FUZZING, signal or SEGV)
            if not metadata.component:
                metadata = replace(metadata, component=component)
            store.insert(content, metadata)
            ingested += 1
    if app.json_output:
        echo_document({"campaigns": [result.to_dump_dict() for result in results], "ingested": ingested})
        return
    for result in results:
        final = result.final_sample
        details = result.failure_diagnostic or result.stop_reason or ""
        click.echo(f"{result.campaign_id}: {result.status.name} crashes={final.crashes_saved if final else 0} "
                   f"edges={final.edges_found if final else 0} {details}".rstrip())
    click.echo(f"Ingested {ingested} crashing inputs.")


@cli.command("import-crashes", help="Import a fuzzer crashes/ directory into the crash store.")
@click.argument("crash_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--target", "target_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--applet", required=True)
@click.option("--component", help="Component name when the target has no detectable one.")
@click.option("--store", "store_dir", type=click.Path(file_okay=False), help="Crash store directory.")
@logs_option
@click.pass_obj
def import_crashes(app: AppContext, crash_dir: str, target_path: str, applet: str,  # noqa: D103, PLR0913
                   component: str | None, store_dir: str | None) -> None:
    target = load_target(target_path)
    if target.component is None:
        if not component:
            msg = f"No component detected in '{target_path}'; pass --component."
            raise ValidationError(msg)
        target = replace(target, component=component)
    store = app.store(store_dir)
    result = store.import_directory(crash_dir, target, applet)
    stats = store.stats()
    if app.json_output:
        echo_document({"imported": len(result.record_ids), "skipped": result.skipped, "store": stats.to_dict()})
    else:
        click.echo(f"Imported {len(result.record_ids)} crashes ({len(result.skipped)} skipped); "
                   f"store holds {stats.records} records.")


@cli.group(help="Screen targets by replaying stored crashes.")
def reuse() -> None:  # noqa: D103
    pass


@reuse.command("screen", help="Replay stored crashes against a new target variant.")
@click.option("--target", "target_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--applet", required=True, help="Applet to replay; also selects the harness profile.")
@click.option("--component", help="Only replay crashes of this component.")
@click.option("--version-from", help="Lowest source version (inclusive).")
@click.option("--version-to", help="Highest source version (exclusive).")
@click.option("--arch", help="Only replay crashes found on this architecture.")
@click.option("--discovery", type=click.Choice([item.value for item in Discovery]))
@click.option("--store", "store_dir", type=click.Path(exists=True, file_okay=False), help="Crash store directory.")
@click.option("--timeout-ms", type=click.IntRange(min=1), help="Per-replay timeout.")
@click.option("--debugger", type=click.Choice(["gdb", "none"]), default="gdb", show_default=True)
@click.option("--transcript", type=click.Path(exists=True, dir_okay=False), help="Canned debugger transcript.")
@click.option("--native", is_flag=True, help="Run the target directly on the host.")
@click.option("--no-write-back", is_flag=True, help="Do not record crashing replays in the store.")
@click.option("--no-cache", is_flag=True, help="Do not use the triage cache.")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), help="Also write the JSON summary here.")
@logs_option
@click.pass_obj
def reuse_screen(app: AppContext, target_path: str, applet: str, component: str | None,  # noqa: D103, PLR0913
                 version_from: str | None, version_to: str | None, arch: str | None, discovery: str | None,
                 store_dir: str | None, timeout_ms: int | None, debugger: str, transcript: str | None,
                 native: bool, no_write_back: bool, no_cache: bool, out_file: str | None) -> None:  # noqa: FBT001
    target = load_target(target_path)
    harness = build_harness(app.config, applet, timeout_ms)
    plan = build_plan(app.config, target, harness, native)
    crash_filter = build_filter(component, applet, version_from, version_to, arch, discovery)
    summary = screen_target(target, app.store(store_dir), crash_filter, harness, build_debugger(debugger, transcript),
                            app.jobs, plan, app.cache(enabled=not no_cache), write_back=not no_write_back)
    document = summary.to_dict()
    if out_file:
        write_json_file(out_file, document)
    if app.json_output:
        echo_document(document)
        return
    click.echo(f"Replayed {summary.total_replayed} crashes on '{target_path}': {summary.crashing} crashing "
               f"({summary.unique_crashing} unique), {summary.timeouts} timeouts, {summary.exec_errors} exec errors.")
    for signature in sorted(set(summary.signatures), key=lambda item: item.short_id):
        click.echo(f"  {signature.short_id} {signature.top_frame}")


@reuse.command("compare", help="Compare unique crashes of a screening summary with a triage report.")
@click.argument("screening_json", type=click.Path(exists=True, dir_okay=False))
@click.argument("triage_json", type=click.Path(exists=True, dir_okay=False))
@logs_option
@click.pass_obj
def reuse_compare(app: AppContext, screening_json: str, triage_json: str) -> None:  # noqa: D103
    report = compare_with_fuzzing(signatures_from_document(read_json_file(screening_json)),
                                  signatures_from_document(read_json_file(triage_json)))
    if app.json_output:
        echo_document(report.to_dict())
        return
    reuse_only, fuzz_only, common = report.counts()
    click.echo(f"reuse only: {reuse_only}, fuzzing only: {fuzz_only}, common: {common}")


def collect_inputs(store: CrashStore | None, target: TargetBinary, applet: str, inputs: tuple[str, ...],
                   crash_dir: str | None) -> tuple[list[bytes], dict[bytes, str]]:
    """Gather triage inputs from files, a crash directory or the store; also map store inputs to record ids."""
    contents = [Path(path).read_bytes() for path in inputs]
    if crash_dir:
        contents.extend(path.read_bytes() for path in sorted(Path(crash_dir).iterdir())
                        if path.is_file() and not path.name.startswith(("README", ".")) and path.stat().st_size)
    record_ids: dict[bytes, str] = {}
    if not contents and store is not None:
        for record in store.query(CrashFilter(applet=applet)):
            if record.source_target_hash == target.content_hash:
                blob = store.get_blob(record.input_hash)
                contents.append(blob)
                record_ids[blob] = record.record_id
    return contents, record_ids


@cli.command(help="Classify, deduplicate and optionally minimize crashing inputs of a target.")
@click.argument("inputs", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", "target_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--applet", required=True)
@click.option("--crash-dir", type=click.Path(exists=True, file_okay=False), help="Directory of crashing inputs.")
@click.option("--store", "store_dir", type=click.Path(file_okay=False),
              help="Crash store; its records for this target are used when no input is given.")
@click.option("--attach", is_flag=True, help="Attach signatures to the store records.")
@click.option("--minimize", is_flag=True, help="Minimize the representative of every group.")
@click.option("--max-steps", type=click.IntRange(min=1), default=DEFAULT_MINIMIZATION_STEPS, show_default=True)
@click.option("--timeout-ms", type=click.IntRange(min=1), help="Per-execution timeout.")
@click.option("--debugger", type=click.Choice(["gdb", "none"]), default="gdb", show_default=True)
@click.option("--transcript", type=click.Path(exists=True, dir_okay=False), help="Canned debugger transcript.")
@click.option("--native", is_flag=True, help="Run the target directly on the host.")
@click.option("--no-cache", is_flag=True, help="Do not use the triage cache.")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), help="Also write the JSON report here.")
@logs_option
@click.pass_obj
def triage(app: AppContext, inputs: tuple[str, ...], target_path: str, applet: str,  # noqa: PLR0913, D103
           crash_dir: str | None, store_dir: str | None, attach: bool, minimize: bool, max_steps: int,  # noqa: FBT001
           timeout_ms: int | None, debugger: str, transcript: str | None, native: bool, no_cache: bool,  # noqa: FBT001
           out_file: str | None) -> None:
    target = load_target(target_path)
    harness = build_harness(app.config, applet, timeout_ms)
    plan = build_plan(app.config, target, harness, native)
    debugger_adapter = build_debugger(debugger, transcript)
    store = app.store(store_dir) if (store_dir or attach or not (inputs or crash_dir)) else None
    contents, record_ids = collect_inputs(store, target, applet, inputs, crash_dir)
    report = triage_batch(contents, plan, harness, target.path, debugger_adapter, app.jobs,
                          app.cache(enabled=not no_cache))
    if attach and store is not None:
        signatures = {entry.input_hash: entry.signature for entry in report.entries if entry.signature}
        for record_id in record_ids.values():
            record = store.get(record_id)
            signature = signatures.get(record.input_hash) if record else None
            if signature is not None and record.signature is None:
                store.attach_signature(record_id, signature)
    minimized: dict[str, Any] = {}
    if minimize:
        minimized_dir = app.config.dump_dir / "minimized"
        minimized_dir.mkdir(parents=True, exist_ok=True)
        by_hash = {entry.input_hash: content for entry, content in zip(report.entries, contents, strict=True)}
        for group in report.groups:
            result = minimize_input(plan, harness, target.path, by_hash[group.representative.input_hash],
                                    group.signature, debugger_adapter, max_steps)
            (minimized_dir / f"{group.signature.frame_hash}.bin").write_bytes(result.minimized_input)
            minimized[group.signature.short_id] = result.to_dict()
    document = {**report.to_dict(), "minimized": minimized}
    if out_file:
        write_json_file(out_file, document)
    print_triage_report(app, report, minimized)


@cli.group(help="Emit comparison and inventory data files.")
def report() -> None:  # noqa: D103
    pass


format_option = click.option("--format", "output_format", type=click.Choice([item.value for item in ReportFormat]),
                             help="Output format (csv by default, json with --json).")


@report.command("compare", help="Align two campaign stats dumps (e.g. with and without LLM seeds).")
@click.argument("dump_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("dump_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--summary", is_flag=True, help="Print only the final values and deltas.")
@format_option
@logs_option
@click.pass_obj
def report_compare(app: AppContext, dump_a: str, dump_b: str, summary: bool,  # noqa: D103
                   output_format: str | None) -> None:  # noqa: FBT001
    table = compare_conditions(ConditionSeries.from_dump(read_json_file(dump_a)),
                               ConditionSeries.from_dump(read_json_file(dump_b)))
    if summary:
        echo_document(table.summary)
        return
    echo_table(app, table, output_format)


@report.command("overlap", help="Count unique crash signatures of two JSON reports: only A, only B, common.")
@click.argument("json_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("json_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--label-a", default="reuse", show_default=True)
@click.option("--label-b", default="fuzzing", show_default=True)
@format_option
@logs_option
@click.pass_obj
def report_overlap(app: AppContext, json_a: str, json_b: str, label_a: str, label_b: str,  # noqa: D103, PLR0913
                   output_format: str | None) -> None:
    counts = overlap(signatures_from_document(read_json_file(json_a)),
                     signatures_from_document(read_json_file(json_b)), label_a, label_b)
    echo_table(app, counts, output_format)


@report.command("inventory", help="Version table of a firmware tree.")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@format_option
@logs_option
@click.pass_obj
def report_inventory(app: AppContext, root: str, output_format: str | None) -> None:  # noqa: D103
    echo_table(app, inventory_report(scan_filesystem(root)), output_format)


@report.command("store", help="Raw and unique crash counts of the store.")
@click.option("--store", "store_dir", type=click.Path(exists=True, file_okay=False), help="Crash store directory.")
@format_option
@logs_option
@click.pass_obj
def report_store(app: AppContext, store_dir: str | None, output_format: str | None) -> None:  # noqa: D103
    echo_table(app, app.store(store_dir).stats(), output_format)


@cli.command(help="Command to clear the triage cache.")
@logs_option
@click.pass_obj
def clear_cache(app: AppContext) -> None:
    """
    Command to clear the triage cache.

    Parameters
    ----------
    app : AppContext
        The shared command context.

    """
    removed = app.cache().clear()
    click.echo(f"Removed {removed} cached triage results.")


def main() -> None:
    """
    Run the CLI and map failures to exit codes.

    0 on success, 1 for usage and configuration errors, 2 when a tool or dependency root is missing,
    3 for internal errors. Diagnostics are one line on standard error.
    """
    try:
        exit_code = cli.main(prog_name=app_name.lower(), standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted.", err=True)
        sys.exit(1)
    except click.ClickException as click_error:
        click_error.show()
        sys.exit(1)
    except FirmFuzzError as error:
        click.echo(f"Error: {error}", err=True)
        sys.exit(error.exit_code)
    except Exception as error:  # noqa: BLE001
        logger.debug("Unhandled error", exc_info=True)
        click.echo(f"Internal error: {error}", err=True)
        sys.exit(3)
    sys.exit(exit_code if isinstance(exit_code, int) else 0)


if __name__ == "__main__":
    main()
