from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src.core.constants import DEFAULT_REPLAY_TIMEOUT_MS
from src.core.enums import Arch
from src.core.errors import ConfigError, InputError
from src.seedgen.models import ProviderConfig

DEFAULT_STORE_DIR = "crashdb"
DEFAULT_DUMP_DIR = "dumps"
CACHE_SUBDIR = ".cache"


@dataclass(frozen=True)
class ToolConfig:
    """
    Settings shared by all commands, read from the YAML file given with `--config`.

    Command line flags override these values.
    """

    store_dir: Path = Path(DEFAULT_STORE_DIR)
    dump_dir: Path = Path(DEFAULT_DUMP_DIR)
    cache_dir: Path | None = None
    sysroots: dict[Arch, Path] = field(default_factory=dict)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    harness_profiles: dict[str, dict[str, Any]] = field(default_factory=dict)
    replay_timeout_ms: int = DEFAULT_REPLAY_TIMEOUT_MS
    jobs: int = 1

    def __post_init__(self) -> None:  # noqa: D105
        if self.replay_timeout_ms <= 0:
            msg = "replay_timeout_ms must be positive."
            raise ConfigError(msg)
        if self.jobs < 1:
            msg = "jobs must be at least 1."
            raise ConfigError(msg)
        if Path(self.store_dir).resolve() == Path(self.dump_dir).resolve():
            msg = f"store_dir and dump_dir must differ, both are '{self.store_dir}'."
            raise ConfigError(msg)

    @property
    def resolved_cache_dir(self) -> Path:
        """The triage cache directory; defaults to `<store_dir>/.cache`."""
        return self.cache_dir or self.store_dir / CACHE_SUBDIR

    def sysroot_for(self, arch: Arch) -> Path | None:  # noqa: D102
        return self.sysroots.get(arch)

    @staticmethod
    def from_dict(data: dict[str, Any], base_dir: Path | None = None) -> ToolConfig:
        """
        Build a ToolConfig from parsed YAML; relative paths are resolved against `base_dir`.

        Raises
        ------
            ConfigError: If a value has the wrong type or an unknown key is present.

        """
        base_dir = base_dir or Path()
        known = {"store_dir", "dump_dir", "cache_dir", "sysroots", "provider", "harness_profiles",
                 "replay_timeout_ms", "jobs"}
        unknown = sorted(set(data) - known)
        if unknown:
            msg = f"Unknown config keys: {', '.join(unknown)}"
            raise ConfigError(msg)

        def resolve(value: str | None) -> Path | None:
            return None if value is None else base_dir / Path(str(value)).expanduser()

        try:
            return ToolConfig(
                store_dir=resolve(data.get("store_dir", DEFAULT_STORE_DIR)),
                dump_dir=resolve(data.get("dump_dir", DEFAULT_DUMP_DIR)),
                cache_dir=resolve(data.get("cache_dir")),
                sysroots={Arch.from_label(label): resolve(path)
                          for label, path in (data.get("sysroots") or {}).items()},
                provider=ProviderConfig(**(data.get("provider") or {})),
                harness_profiles=dict(data.get("harness_profiles") or {}),
                replay_timeout_ms=int(data.get("replay_timeout_ms", DEFAULT_REPLAY_TIMEOUT_MS)),
                jobs=int(data.get("jobs", 1)),
            )
        except (TypeError, ValueError, AttributeError, InputError) as error:
            msg = f"Invalid config value: {error}"
            raise ConfigError(msg) from error
