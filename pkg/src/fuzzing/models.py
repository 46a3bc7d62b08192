from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

from src.core.constants import (
    DEFAULT_POLL_INTERVAL_S,
    DEFAULT_REPLAY_TIMEOUT_MS,
    HARNESS_PROFILES,
    INPUT_FILE_PLACEHOLDER,
    TARGET_PLACEHOLDER,
)
from src.core.enums import Arch, CampaignStatus, CrashSignal
from src.core.errors import ConfigError, ValidationError

if TYPE_CHECKING:
    from src.inventory.models import TargetBinary  # pragma: no cover
    from src.seedgen.models import SeedCorpus  # pragma: no cover


@dataclass(frozen=True)
class HarnessSpec:
    """
    How to run the target on one input.

    `argv_template` uses `{target}` for the binary path and `@@` for the input file path, like the
    external fuzzer does. Exactly one input mechanism is active: `@@` in the template or `stdin_mode`.
    """

    argv_template: tuple[str, ...]
    stdin_mode: bool = False
    env: dict[str, str] = field(default_factory=dict)
    sysroot: Path | None = None
    timeout_ms: int = DEFAULT_REPLAY_TIMEOUT_MS

    def __post_init__(self) -> None:  # noqa: D105
        object.__setattr__(self, "argv_template", tuple(self.argv_template))
        if not self.argv_template:
            msg = "Harness argv_template must not be empty."
            raise ConfigError(msg)
        if self.uses_input_file == self.stdin_mode:
            msg = "Harness needs exactly one input mechanism: '@@' in argv_template or stdin_mode."
            raise ConfigError(msg)
        if self.timeout_ms <= 0:
            msg = "Harness timeout_ms must be positive."
            raise ConfigError(msg)

    @property
    def uses_input_file(self) -> bool:  # noqa: D102
        return any(INPUT_FILE_PLACEHOLDER in arg for arg in self.argv_template)

    def render(self, target_path: str | Path, input_path: str | Path | None = None) -> list[str]:
        """
        Substitute the placeholders.

        When `input_path` is None the `@@` placeholder is left in place for the fuzzer to fill.
        """
        argv = [arg.replace(TARGET_PLACEHOLDER, str(target_path)) for arg in self.argv_template]
        if input_path is not None:
            argv = [arg.replace(INPUT_FILE_PLACEHOLDER, str(input_path)) for arg in argv]
        return argv

    def with_timeout(self, timeout_ms: int) -> HarnessSpec:  # noqa: D102
        return HarnessSpec(self.argv_template, self.stdin_mode, dict(self.env), self.sysroot, timeout_ms)

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {
            "argv_template": list(self.argv_template),
            "stdin_mode": self.stdin_mode,
            "env": dict(self.env),
            "sysroot": str(self.sysroot) if self.sysroot else None,
            "timeout_ms": self.timeout_ms,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> HarnessSpec:
        """Build a HarnessSpec from its JSON/YAML form."""
        try:
            return HarnessSpec(
                argv_template=tuple(data["argv_template"]),
                stdin_mode=bool(data.get("stdin_mode", False)),
                env={str(key): str(value) for key, value in (data.get("env") or {}).items()},
                sysroot=Path(data["sysroot"]) if data.get("sysroot") else None,
                timeout_ms=int(data.get("timeout_ms", DEFAULT_REPLAY_TIMEOUT_MS)),
            )
        except (KeyError, TypeError, ValueError) as error:
            msg = f"Invalid harness definition: {error}"
            raise ConfigError(msg) from error

    @staticmethod
    def for_applet(applet: str, profiles: dict[str, dict[str, Any]] | None = None) -> HarnessSpec:
        """
        Return the harness profile for an applet, e.g. `{target} awk -f @@` for awk.

        Profiles passed in take precedence over the built-in ones; unknown applets get `{target} <applet> @@`.
        """
        merged = {**HARNESS_PROFILES, **(profiles or {})}
        profile = merged.get(applet, {"argv_template": [TARGET_PLACEHOLDER, applet, INPUT_FILE_PLACEHOLDER]})
        return HarnessSpec.from_dict(profile)


@dataclass(frozen=True)
class TerminationCriteria:
    """Campaign stop conditions; the first one reached ends the campaign."""

    max_runtime_s: int | None = None
    max_crashes: int | None = None
    max_cycles: int | None = None

    def __post_init__(self) -> None:  # noqa: D105
        bounds = (self.max_runtime_s, self.max_crashes, self.max_cycles)
        if all(bound is None for bound in bounds):
            msg = "At least one termination criterion must be set."
            raise ConfigError(msg)
        if any(bound is not None and bound <= 0 for bound in bounds):
            msg = "Termination criteria must be positive."
            raise ConfigError(msg)

    def stop_reason(self, sample: FuzzStatsSample | None, elapsed_s: float) -> str | None:
        """Return which criterion fired for the latest sample and supervisor elapsed time, or None."""
        if self.max_crashes is not None and sample and sample.crashes_saved >= self.max_crashes:
            return f"max_crashes={self.max_crashes}"
        if self.max_cycles is not None and sample and sample.cycles_done >= self.max_cycles:
            return f"max_cycles={self.max_cycles}"
        if self.max_runtime_s is not None and (
                (sample and sample.relative_time_s >= self.max_runtime_s) or elapsed_s >= self.max_runtime_s):
            return f"max_runtime_s={self.max_runtime_s}"
        return None

    @staticmethod
    def from_dict(data: dict[str, Any]) -> TerminationCriteria:  # noqa: D102
        try:
            return TerminationCriteria(**{key: int(value) for key, value in data.items() if value is not None})
        except (TypeError, ValueError) as error:
            msg = f"Invalid termination criteria: {error}"
            raise ConfigError(msg) from error


class ExecutionMode(Enum):  # noqa: D101
    NATIVE = "native"
    EMULATED = "emulated"


@dataclass(frozen=True)
class ExecutionPlan:
    """
    Whether a target runs directly on the host or under user-mode emulation with a sysroot.

    For emulated plans, `command_prefix` is the emulator invocation placed before the harness argv.
    """

    mode: ExecutionMode
    arch: Arch = Arch.UNKNOWN
    sysroot: Path | None = None

    @staticmethod
    def native(arch: Arch = Arch.UNKNOWN) -> ExecutionPlan:  # noqa: D102
        return ExecutionPlan(ExecutionMode.NATIVE, arch)

    @property
    def emulator(self) -> str | None:
        """Name of the user-mode emulator binary, e.g. 'qemu-arm'."""
        if self.mode is ExecutionMode.NATIVE or self.arch.qemu_name is None:
            return None
        return f"qemu-{self.arch.qemu_name}"

    def command_prefix(self) -> list[str]:  # noqa: D102
        if self.mode is ExecutionMode.NATIVE:
            return []
        return [self.emulator or "qemu", "-L", str(self.sysroot)]

    def __str__(self) -> str:  # noqa: D105
        if self.mode is ExecutionMode.NATIVE:
            return "NATIVE"
        return f"EMULATED({self.sysroot})"


@dataclass(frozen=True)
class FuzzStatsSample:  # noqa: D101
    relative_time_s: int
    crashes_saved: int = 0
    edges_found: int = 0
    execs_done: int = 0
    cycles_done: int = 0

    # Counters that must never go down within one campaign.
    MONOTONE_FIELDS = ("relative_time_s", "crashes_saved", "edges_found", "execs_done")

    def __post_init__(self) -> None:  # noqa: D105
        for sample_field in fields(self):
            if getattr(self, sample_field.name) < 0:
                msg = f"Stats field '{sample_field.name}' must not be negative."
                raise ValidationError(msg)

    def regressions_from(self, previous: FuzzStatsSample) -> list[str]:
        """Return the monotone counters that decreased since `previous`."""
        return [name for name in self.MONOTONE_FIELDS if getattr(self, name) < getattr(previous, name)]

    def to_dict(self) -> dict[str, int]:  # noqa: D102
        return asdict(self)


@dataclass(frozen=True)
class HarvestedCrash:
    """A crashing input found by the fuzzer, with the signal encoded in its file name when known."""

    name: str
    content: bytes
    signal: CrashSignal | None = None


@dataclass
class CampaignConfig:  # noqa: D101
    target: TargetBinary
    applet: str
    harness: HarnessSpec
    corpus: SeedCorpus
    criteria: TerminationCriteria
    output_dir: Path
    poll_interval_s: int = DEFAULT_POLL_INTERVAL_S
    campaign_id: str | None = None
    plan: ExecutionPlan | None = None

    def __post_init__(self) -> None:  # noqa: D105
        self.output_dir = Path(self.output_dir)
        if not self.corpus.seeds:
            msg = f"Campaign '{self.id}' has an empty corpus."
            raise ConfigError(msg)
        if self.poll_interval_s <= 0:
            msg = f"Campaign '{self.id}' needs a positive poll interval."
            raise ConfigError(msg)

    @property
    def id(self) -> str:
        """The campaign id: explicit `campaign_id`, else the output directory name."""
        return self.campaign_id or self.output_dir.name


@dataclass(frozen=True)
class CampaignResult:
    """
    What one supervised fuzzer run produced.

    COMPLETED results always hold at least one stats sample; CATASTROPHIC ones always explain themselves.
    """

    campaign_id: str
    status: CampaignStatus
    stats_series: tuple[FuzzStatsSample, ...] = ()
    crash_inputs: tuple[bytes, ...] = ()
    crash_signals: tuple[CrashSignal | None, ...] = ()
    queue_size: int = 0
    failure_diagnostic: str | None = None
    stop_reason: str | None = None
    target_hash: str = ""
    applet: str = ""
    seed_origin: str | None = None

    def __post_init__(self) -> None:  # noqa: D105
        if self.status is CampaignStatus.COMPLETED and not self.stats_series:
            msg = f"Completed campaign '{self.campaign_id}' has no stats sample."
            raise ValidationError(msg)
        if self.status is CampaignStatus.CATASTROPHIC and not self.failure_diagnostic:
            msg = f"Catastrophic campaign '{self.campaign_id}' has no diagnostic."
            raise ValidationError(msg)

    @property
    def final_sample(self) -> FuzzStatsSample | None:  # noqa: D102
        return self.stats_series[-1] if self.stats_series else None

    def to_dump_dict(self) -> dict[str, Any]:
        """Return the document written to the shared stats dump directory."""
        return {
            "campaign_id": self.campaign_id,
            "target_hash": self.target_hash,
            "applet": self.applet,
            "seed_origin": self.seed_origin,
            "status": self.status.name,
            "final_stats": self.final_sample.to_dict() if self.final_sample else None,
            "samples": len(self.stats_series),
            "crashes": len(self.crash_inputs),
            "queue_size": self.queue_size,
            "stop_reason": self.stop_reason,
            "failure_diagnostic": self.failure_diagnostic,
        }
