from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Any

from src.core.constants import (
    CORPUS_META_FILE,
    DEFAULT_POLL_INTERVAL_S,
    ENCODING_UTF_8,
    MAX_UNPARSABLE_STATS_POLLS,
    SHUTDOWN_GRACE_PERIOD_S,
    STATS_DUMP_SUFFIX,
)
from src.core.enums import Arch, CampaignStatus
from src.core.errors import ConfigError, FirmFuzzError, StatsParseError
from src.fuzzing.execution import plan_execution
from src.fuzzing.models import (
    CampaignConfig,
    CampaignResult,
    ExecutionMode,
    ExecutionPlan,
    FuzzStatsSample,
    HarnessSpec,
    TerminationCriteria,
)
from src.fuzzing.stats import parse_stats
from src.inventory.scanner import describe_binary
from src.seedgen.corpus_io import read_corpus, write_corpus

if TYPE_CHECKING:
    from collections.abc import Sequence  # pragma: no cover

    from src.fuzzing.adapters.base import FuzzerAdapter, FuzzerProcess  # pragma: no cover

logger = logging.getLogger(__name__)

SEEDS_DIR = "seeds"


def _shutdown(process: FuzzerProcess) -> None:
    process.terminate()
    if process.wait(SHUTDOWN_GRACE_PERIOD_S) is None:
        logger.warning("Fuzzer ignored termination for %ss, killing it", SHUTDOWN_GRACE_PERIOD_S)
        process.kill()
        process.wait(SHUTDOWN_GRACE_PERIOD_S)


def _materialize_corpus(config: CampaignConfig) -> Path:
    corpus_dir = config.output_dir / SEEDS_DIR
    if not (corpus_dir / CORPUS_META_FILE).is_file():
        write_corpus(config.corpus, corpus_dir)
    return corpus_dir


def _identity(config: CampaignConfig) -> dict[str, Any]:
    origin = config.corpus.origin
    return {"target_hash": config.target.content_hash, "applet": config.applet,
            "seed_origin": origin.value if origin else None}


def _read_stats(stats_path: Path) -> str | None:
    try:
        return stats_path.read_text(encoding=ENCODING_UTF_8)
    except FileNotFoundError:
        return None


def run_campaign(config: CampaignConfig, adapter: FuzzerAdapter, host_arch: Arch | None = None) -> CampaignResult:
    """
    Run one supervised fuzzing campaign until a termination criterion fires or the fuzzer dies.

    The stats file is polled every `poll_interval_s`. Samples that equal the previous one are not
    repeated in the series. Outcomes:

    - a criterion fires: the fuzzer is terminated (killed after a grace period) and the result is COMPLETED;
    - a sample decreases a monotone counter, or the stats stay unparsable for several polls: CATASTROPHIC;
    - the fuzzer itself dies from a crash signal: CATASTROPHIC;
    - the fuzzer cannot be spawned or exits early with a nonzero status: FAILED.

    On return the fuzzer process is no longer running.
    """
    campaign_id = config.id
    plan = config.plan or plan_execution(config.target, host_arch or Arch.host(), config.harness.sysroot)
    corpus_dir = _materialize_corpus(config)
    logger.info("Campaign %s: fuzzing %s (%s) with %s", campaign_id, config.applet, plan, adapter.name)

    try:
        process = adapter.spawn(config, plan, corpus_dir)
    except OSError as error:
        return CampaignResult(campaign_id, CampaignStatus.FAILED, failure_diagnostic=f"Cannot spawn fuzzer: {error}",
                              **_identity(config))

    clock = process.clock
    started = clock.monotonic()
    stats_path = adapter.stats_path(config.output_dir)
    series: list[FuzzStatsSample] = []
    unparsable_polls = 0
    status = CampaignStatus.COMPLETED
    diagnostic = None
    stop_reason = None

    while True:
        clock.sleep(config.poll_interval_s)
        text = _read_stats(stats_path)
        if text is not None:
            try:
                sample = parse_stats(text)
            except StatsParseError as error:
                unparsable_polls += 1
                logger.debug("Campaign %s: %s", campaign_id, error)
                if unparsable_polls >= MAX_UNPARSABLE_STATS_POLLS:
                    status, diagnostic = CampaignStatus.CATASTROPHIC, f"{error} ({unparsable_polls} polls in a row)"
                    break
            else:
                unparsable_polls = 0
                regressions = sample.regressions_from(series[-1]) if series else []
                if regressions:
                    status = CampaignStatus.CATASTROPHIC
                    diagnostic = f"Stats counters decreased: {', '.join(regressions)}"
                    break
                if not series or sample != series[-1]:
                    series.append(sample)

        stop_reason = config.criteria.stop_reason(series[-1] if series else None, clock.monotonic() - started)
        if stop_reason:
            logger.info("Campaign %s: %s reached", campaign_id, stop_reason)
            break

        returncode = process.poll()
        if returncode is not None:
            if adapter.is_catastrophic_exit(returncode):
                status, diagnostic = CampaignStatus.CATASTROPHIC, f"Fuzzer killed by signal {-returncode}"
            elif returncode != 0:
                status, diagnostic = CampaignStatus.FAILED, f"Fuzzer exited early with status {returncode}"
            elif not series:
                status, diagnostic = CampaignStatus.FAILED, "Fuzzer exited without writing statistics"
            else:
                stop_reason = "fuzzer exited"
            break

    if status is CampaignStatus.COMPLETED and not series:
        status, diagnostic = CampaignStatus.FAILED, f"Fuzzer wrote no statistics before {stop_reason}"
    if process.poll() is None:
        _shutdown(process)

    crashes = adapter.harvest_crashes(config.output_dir)
    if diagnostic:
        logger.warning("Campaign %s: %s", campaign_id, diagnostic)
    result = CampaignResult(
        campaign_id=campaign_id,
        status=status,
        stats_series=tuple(series),
        crash_inputs=tuple(crash.content for crash in crashes),
        crash_signals=tuple(crash.signal for crash in crashes),
        queue_size=adapter.queue_size(config.output_dir),
        failure_diagnostic=diagnostic,
        stop_reason=stop_reason,
        **_identity(config),
    )
    logger.info("Campaign %s: %s, %d samples, %d crashes", campaign_id, status.name, len(series), len(crashes))
    return result


def _check_distinct(configs: Sequence[CampaignConfig]) -> None:
    output_dirs: dict[Path, str] = {}
    ids: set[str] = set()
    for config in configs:
        output_dir = config.output_dir.resolve()
        if output_dir in output_dirs:
            msg = f"Campaigns '{output_dirs[output_dir]}' and '{config.id}' share output directory {output_dir}."
            raise ConfigError(msg)
        if config.id in ids:
            msg = f"Duplicate campaign id '{config.id}'."
            raise ConfigError(msg)
        output_dirs[output_dir] = config.id
        ids.add(config.id)


def dump_result(result: CampaignResult, dump_dir: str | Path) -> Path:
    """Write the JSON stats dump of a campaign as `<dump_dir>/<campaign_id>.stats.json`."""
    dump_path = Path(dump_dir) / f"{result.campaign_id}{STATS_DUMP_SUFFIX}"
    dump_path.parent.mkdir(parents=True, exist_ok=True)
    document = {**result.to_dump_dict(), "series": [sample.to_dict() for sample in result.stats_series]}
    dump_path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding=ENCODING_UTF_8)
    return dump_path


def run_batch(configs: Sequence[CampaignConfig], adapter: FuzzerAdapter, parallelism: int = 1,
              dump_dir: str | Path | None = None, host_arch: Arch | None = None) -> list[CampaignResult]:
    """
    Run campaigns concurrently; one campaign failing never affects the others.

    Results come back in input order. When `dump_dir` is set each result is also dumped there.

    Raises
    ------
        ConfigError: If two campaigns share an output directory or an id, before anything runs.

    """
    _check_distinct(configs)
    if parallelism < 1:
        msg = "Parallelism must be at least 1."
        raise ConfigError(msg)

    def isolated(config: CampaignConfig) -> CampaignResult:
        try:
            result = run_campaign(config, adapter, host_arch)
        except FirmFuzzError as error:
            result = CampaignResult(config.id, CampaignStatus.FAILED, failure_diagnostic=str(error),
                                    **_identity(config))
        except Exception as error:
            logger.exception("Campaign %s crashed the supervisor", config.id)
            result = CampaignResult(config.id, CampaignStatus.FAILED, failure_diagnostic=repr(error),
                                    **_identity(config))
        if dump_dir is not None:
            dump_result(result, dump_dir)
        return result

    with ThreadPoolExecutor(max_workers=parallelism, thread_name_prefix="campaign") as executor:
        return list(executor.map(isolated, configs))


def _campaign_from_entry(entry: dict[str, Any], base_dir: Path, profiles: dict[str, Any] | None) -> CampaignConfig:
    try:
        target_path = base_dir / entry["target"]
        applet = entry["applet"]
        output_dir = base_dir / entry["output_dir"]
        corpus = read_corpus(base_dir / entry["corpus_dir"], applet)
        criteria = TerminationCriteria.from_dict(entry["criteria"])
    except KeyError as error:
        msg = f"Campaign entry is missing {error}"
        raise ConfigError(msg) from error
    try:
        file_bytes = target_path.read_bytes()
    except OSError as error:
        msg = f"Cannot read target {target_path}: {error}"
        raise ConfigError(msg) from error
    target = describe_binary(target_path, file_bytes)
    harness = (HarnessSpec.from_dict(entry["harness"]) if "harness" in entry
               else HarnessSpec.for_applet(applet, profiles))
    plan = None
    if entry.get("plan") == ExecutionMode.NATIVE.value:
        plan = ExecutionPlan.native(target.arch)
    logger.debug("Loaded campaign %s on %s", entry.get("campaign_id", output_dir.name), target_path)
    return CampaignConfig(
        target=target,
        applet=applet,
        harness=harness,
        corpus=corpus,
        criteria=criteria,
        output_dir=output_dir,
        poll_interval_s=int(entry.get("poll_interval_s", DEFAULT_POLL_INTERVAL_S)),
        campaign_id=entry.get("campaign_id"),
        plan=plan,
    )


def load_batch_file(batch_path: str | Path, profiles: dict[str, Any] | None = None) -> list[CampaignConfig]:
    """
    Load campaign configs from a JSON batch file of the form `{"campaigns": [...]}`.

    Relative paths inside the file are resolved against the file's directory. An entry may set
    `"plan": "native"` to run the target directly regardless of its detected architecture.
    """
    batch_path = Path(batch_path)
    try:
        data = json.loads(batch_path.read_text(encoding=ENCODING_UTF_8))
    except (OSError, json.JSONDecodeError) as error:
        msg = f"Cannot load batch file {batch_path}: {error}"
        raise ConfigError(msg) from error
    entries = data.get("campaigns") if isinstance(data, dict) else None
    if not isinstance(entries, list) or not entries:
        msg = f"Batch file {batch_path} has no 'campaigns' list."
        raise ConfigError(msg)
    return [_campaign_from_entry(entry, batch_path.parent, profiles) for entry in entries]
