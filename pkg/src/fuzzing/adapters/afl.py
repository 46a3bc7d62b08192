from __future__ import annotations

import logging
import os
import shutil
import subprocess
from pathlib import Path
from typing import TYPE_CHECKING, BinaryIO

from src.core.constants import SHUTDOWN_GRACE_PERIOD_S
from src.fuzzing.adapters.base import FuzzerAdapter, FuzzerProcess
from src.fuzzing.execution import build_command
from src.fuzzing.models import ExecutionMode
from src.fuzzing.process_utils import kill_tree, terminate_tree

if TYPE_CHECKING:
    from src.fuzzing.models import CampaignConfig, ExecutionPlan  # pragma: no cover

logger = logging.getLogger(__name__)

FINDINGS_DIR = "findings"
FUZZER_INSTANCE = "default"
FUZZER_LOG = "fuzzer.log"


class PopenFuzzerProcess(FuzzerProcess):  # noqa: D101
    def __init__(self, process: subprocess.Popen, log_file: BinaryIO) -> None:  # noqa: D107
        self.process = process
        self.log_file = log_file

    def poll(self) -> int | None:  # noqa: D102
        returncode = self.process.poll()
        if returncode is not None:
            self.log_file.close()
        return returncode

    def terminate(self) -> None:  # noqa: D102
        terminate_tree(self.process.pid, SHUTDOWN_GRACE_PERIOD_S)

    def kill(self) -> None:  # noqa: D102
        kill_tree(self.process.pid)

    def wait(self, timeout_s: float) -> int | None:  # noqa: D102
        try:
            returncode = self.process.wait(timeout=timeout_s)
        except subprocess.TimeoutExpired:
            return None
        self.log_file.close()
        return returncode


class AflPlusPlusAdapter(FuzzerAdapter):
    """
    Runs AFL++ in QEMU mode against an uninstrumented binary.

    Layout under the campaign output directory: `findings/default/{fuzzer_stats,crashes,queue}` plus
    the fuzzer's console output in `fuzzer.log`.
    """

    name = "afl++"

    def __init__(self, executable: str = "afl-fuzz") -> None:  # noqa: D107
        self.executable = executable

    def is_available(self) -> bool:  # noqa: D102
        return shutil.which(self.executable) is not None

    def command(self, config: CampaignConfig, plan: ExecutionPlan, corpus_dir: Path) -> list[str]:
        """
        Build the fuzzer command line; the harness keeps its `@@` for the fuzzer to substitute.

        A runtime bound is passed as `-V` so the fuzzer stops on its own even if the supervisor is gone.
        """
        harness_argv = build_command(plan.native(plan.arch), config.harness, config.target.path, None)
        runtime_bound = ["-V", str(config.criteria.max_runtime_s)] if config.criteria.max_runtime_s else []
        return [
            self.executable, "-Q",
            "-i", str(corpus_dir),
            "-o", str(config.output_dir / FINDINGS_DIR),
            "-t", str(config.harness.timeout_ms),
            *runtime_bound,
            "--", *harness_argv,
        ]

    def spawn(self, config: CampaignConfig, plan: ExecutionPlan, corpus_dir: Path) -> FuzzerProcess:  # noqa: D102
        env = {**os.environ, **config.harness.env, "AFL_NO_UI": "1"}
        if plan.mode is ExecutionMode.EMULATED:
            env["QEMU_LD_PREFIX"] = str(plan.sysroot)
        command = self.command(config, plan, corpus_dir)
        logger.debug("Spawning %s", " ".join(command))
        config.output_dir.mkdir(parents=True, exist_ok=True)
        log_file = Path(config.output_dir / FUZZER_LOG).open("wb")  # noqa: SIM115
        try:
            process = subprocess.Popen(  # noqa: S603
                command, env=env, stdin=subprocess.DEVNULL, stdout=log_file, stderr=subprocess.STDOUT,
                start_new_session=True)
        except OSError:
            log_file.close()
            raise
        return PopenFuzzerProcess(process, log_file)

    def _instance_dir(self, output_dir: Path) -> Path:
        return output_dir / FINDINGS_DIR / FUZZER_INSTANCE

    def stats_path(self, output_dir: Path) -> Path:  # noqa: D102
        return self._instance_dir(output_dir) / "fuzzer_stats"

    def crash_dir(self, output_dir: Path) -> Path:  # noqa: D102
        return self._instance_dir(output_dir) / "crashes"

    def queue_dir(self, output_dir: Path) -> Path:  # noqa: D102
        return self._instance_dir(output_dir) / "queue"
