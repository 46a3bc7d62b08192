from __future__ import annotations

import base64
import json
import logging
import signal
import threading
from pathlib import Path
from typing import TYPE_CHECKING, Any

from src.core.constants import ENCODING_UTF_8
from src.core.errors import ConfigError
from src.fuzzing.adapters.base import FuzzerAdapter, FuzzerProcess

if TYPE_CHECKING:
    from src.fuzzing.models import CampaignConfig, ExecutionPlan  # pragma: no cover

logger = logging.getLogger(__name__)

SCRIPTED_DIR = "scripted"
DEFAULT_SCRIPT_KEY = "*"


class VirtualClock:
    """Clock whose time only moves when someone sleeps on it; each sleep is one fuzzer tick."""

    def __init__(self, process: ScriptedFuzzerProcess) -> None:  # noqa: D107
        self.process = process
        self.now = 0.0

    def monotonic(self) -> float:  # noqa: D102
        return self.now

    def sleep(self, seconds: float) -> None:  # noqa: D102
        self.now += seconds
        self.process.tick()


class ScriptedFuzzerProcess(FuzzerProcess):
    """
    Replays a fuzzer script instead of running a fuzzer.

    Every tick writes the next scripted stats entry to the stats file. Dict entries are rendered as
    `key : value` lines, with `run_time` filled from the virtual clock when the entry omits it; string
    entries are written verbatim. After the last entry the last one keeps being written.
    """

    def __init__(self, script: dict[str, Any], stats_path: Path) -> None:  # noqa: D107
        self.script = script
        self.stats_path = stats_path
        self.clock = VirtualClock(self)
        self.ticks = 0
        self.returncode: int | None = None
        self.terminate_requests = 0
        self.killed = False

    def tick(self) -> None:  # noqa: D102
        if self.returncode is not None:
            return
        self.ticks += 1
        samples = self.script.get("samples") or []
        if samples:
            self._write_sample(samples[min(self.ticks, len(samples)) - 1])
        exit_spec = self.script.get("exit")
        if exit_spec is not None and self.ticks >= int(exit_spec.get("after", 0)):
            self._exit_as_scripted(exit_spec)

    def _write_sample(self, entry: dict[str, Any] | str) -> None:
        if isinstance(entry, str):
            text = entry
        else:
            values = {"run_time": int(self.clock.now), **entry}
            text = "".join(f"{key:<18}: {value}\n" for key, value in values.items())
        self.stats_path.write_text(text, encoding=ENCODING_UTF_8)

    def _exit_as_scripted(self, exit_spec: dict[str, Any]) -> None:
        if "signal" in exit_spec:
            self.returncode = -int(exit_spec["signal"])
        else:
            self.returncode = int(exit_spec.get("status", 0))

    def poll(self) -> int | None:  # noqa: D102
        exit_spec = self.script.get("exit")
        if self.returncode is None and exit_spec is not None and int(exit_spec.get("after", 0)) == 0:
            self._exit_as_scripted(exit_spec)
        return self.returncode

    def terminate(self) -> None:  # noqa: D102
        self.terminate_requests += 1
        if self.returncode is None and not self.script.get("ignore_terminate", False):
            self.returncode = 0

    def kill(self) -> None:  # noqa: D102
        if self.returncode is None:
            self.killed = True
            self.returncode = -int(signal.SIGKILL)

    def wait(self, timeout_s: float) -> int | None:  # noqa: D102
        if self.poll() is None:
            self.clock.now += timeout_s
        return self.returncode


class ScriptedFuzzerAdapter(FuzzerAdapter):
    """
    Offline stand-in for a real fuzzer, driven by JSON scripts.

    A script may hold `samples`, `exit` (`after` ticks, then `status` or `signal`), `ignore_terminate`,
    `spawn_error`, `crashes` (entries with `name` and `text` or `base64`) and `queue_size`.
    Scripts are looked up by campaign id, falling back to the `*` script.

    Example:
    -------
    >>> adapter = ScriptedFuzzerAdapter({"*": {"samples": [{"saved_crashes": 0}], "exit": {"after": 1}}})
    >>> adapter.is_available()
    True

    """

    name = "scripted"

    def __init__(self, scripts: dict[str, dict[str, Any]]) -> None:  # noqa: D107
        self.scripts = scripts
        self.processes: dict[str, ScriptedFuzzerProcess] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, script_path: str | Path) -> ScriptedFuzzerAdapter:
        """Load a script file: either one script, or `{"campaigns": {id: script}}`."""
        try:
            data = json.loads(Path(script_path).read_text(encoding=ENCODING_UTF_8))
        except (OSError, json.JSONDecodeError) as error:
            msg = f"Cannot load fuzzer script {script_path}: {error}"
            raise ConfigError(msg) from error
        if isinstance(data, dict) and isinstance(data.get("campaigns"), dict):
            return cls(data["campaigns"])
        return cls({DEFAULT_SCRIPT_KEY: data})

    def is_available(self) -> bool:  # noqa: D102
        return True

    def script_for(self, campaign_id: str) -> dict[str, Any]:  # noqa: D102
        script = self.scripts.get(campaign_id, self.scripts.get(DEFAULT_SCRIPT_KEY))
        if script is None:
            msg = f"No fuzzer script for campaign '{campaign_id}'."
            raise ConfigError(msg)
        return script

    def spawn(self, config: CampaignConfig, plan: ExecutionPlan, corpus_dir: Path) -> FuzzerProcess:  # noqa: ARG002, D102
        script = self.script_for(config.id)
        if script.get("spawn_error"):
            raise OSError(script["spawn_error"])
        base_dir = config.output_dir / SCRIPTED_DIR
        for directory in (base_dir, self.crash_dir(config.output_dir), self.queue_dir(config.output_dir)):
            directory.mkdir(parents=True, exist_ok=True)
        for crash in script.get("crashes", []):
            content = base64.b64decode(crash["base64"]) if "base64" in crash else crash["text"].encode()
            (self.crash_dir(config.output_dir) / crash["name"]).write_bytes(content)
        for index in range(int(script.get("queue_size", 0))):
            (self.queue_dir(config.output_dir) / f"id:{index:06d}").write_bytes(b"")
        process = ScriptedFuzzerProcess(script, self.stats_path(config.output_dir))
        with self._lock:
            self.processes[config.id] = process
        logger.debug("Scripted fuzzer started for campaign %s", config.id)
        return process

    def stats_path(self, output_dir: Path) -> Path:  # noqa: D102
        return output_dir / SCRIPTED_DIR / "fuzzer_stats"

    def crash_dir(self, output_dir: Path) -> Path:  # noqa: D102
        return output_dir / SCRIPTED_DIR / "crashes"

    def queue_dir(self, output_dir: Path) -> Path:  # noqa: D102
        return output_dir / SCRIPTED_DIR / "queue"
