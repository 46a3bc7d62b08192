from __future__ import annotations

import logging
import os
import shutil
import socket
import subprocess
import tempfile
from abc import ABC, abstractmethod
from pathlib import Path
from typing import TYPE_CHECKING

from src.core.constants import ENCODING_UTF_8
from src.fuzzing.models import ExecutionMode
from src.fuzzing.process_utils import kill_tree

if TYPE_CHECKING:
    from collections.abc import Callable  # pragma: no cover

    from src.fuzzing.models import ExecutionPlan, HarnessSpec  # pragma: no cover

logger = logging.getLogger(__name__)

BACKTRACE_LIMIT = 1024
DEBUGGER_TIMEOUT_SLACK_S = 30
DEBUGGER_SLOWDOWN = 10
SIGINFO_FAULT_ADDRESS = "p $_siginfo._sifields._sigfault.si_addr"


class DebuggerAdapter(ABC):
    """Runs the target once on an input under a debugger and returns the batch transcript."""

    name = "debugger"

    @abstractmethod
    def is_available(self, plan: ExecutionPlan) -> bool: ...  # noqa: D102

    @abstractmethod
    def run(self, plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path, input_bytes: bytes) -> str:
        """Return the transcript; an empty transcript means the debugger produced nothing usable."""


def _free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


class GdbDebuggerAdapter(DebuggerAdapter):
    """
    Drives gdb in batch mode: run, backtrace, fault address and memory map.

    Emulated targets run under the emulator's gdb stub and are debugged with `gdb-multiarch`.
    """

    name = "gdb"

    def __init__(self, executable: str = "gdb", multiarch_executable: str = "gdb-multiarch") -> None:  # noqa: D107
        self.executable = executable
        self.multiarch_executable = multiarch_executable

    def _executable_for(self, plan: ExecutionPlan) -> str:
        return self.executable if plan.mode is ExecutionMode.NATIVE else self.multiarch_executable

    def is_available(self, plan: ExecutionPlan) -> bool:  # noqa: D102
        if shutil.which(self._executable_for(plan)) is None:
            return False
        return plan.mode is ExecutionMode.NATIVE or shutil.which(plan.emulator or "") is not None

    def _commands(self) -> list[str]:
        commands = [f"bt {BACKTRACE_LIMIT}", SIGINFO_FAULT_ADDRESS, "info proc mappings", "kill"]
        return [argument for command in commands for argument in ("-ex", command)]

    def run(self, plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,  # noqa: D102
            input_bytes: bytes) -> str:
        timeout_s = harness.timeout_ms / 1000 * DEBUGGER_SLOWDOWN + DEBUGGER_TIMEOUT_SLACK_S
        target_path = Path(target_path).absolute()
        with tempfile.TemporaryDirectory(prefix="firmfuzz-gdb-") as work_dir:
            input_path = Path(work_dir) / "input"
            input_path.write_bytes(input_bytes)
            argv = harness.render(target_path, input_path if harness.uses_input_file else None)
            env = {**os.environ, **harness.env}
            if plan.mode is ExecutionMode.NATIVE:
                run_command = f"run < {input_path}" if harness.stdin_mode else "run"
                command = [self.executable, "-batch", "-nx", "-ex", "set pagination off", "-ex", run_command,
                           *self._commands(), "--args", *argv]
                return self._run_debugger(command, work_dir, env, timeout_s)
            port = _free_port()
            stub_command = [plan.emulator or "qemu", "-L", str(plan.sysroot), "-g", str(port), *argv]
            with input_path.open("rb") as stub_stdin:
                stub = subprocess.Popen(  # noqa: S603
                    stub_command, cwd=work_dir, env=env, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                    stdin=stub_stdin if harness.stdin_mode else subprocess.DEVNULL, start_new_session=True)
            try:
                command = [self.multiarch_executable, "-batch", "-nx", "-ex", "set pagination off",
                           "-ex", f"set sysroot {plan.sysroot}", "-ex", f"target remote 127.0.0.1:{port}",
                           "-ex", "continue", *self._commands(), str(target_path)]
                return self._run_debugger(command, work_dir, env, timeout_s)
            finally:
                kill_tree(stub.pid)

    def _run_debugger(self, command: list[str], work_dir: str, env: dict[str, str], timeout_s: float) -> str:
        logger.debug("Running %s", " ".join(command))
        try:
            completed = subprocess.run(  # noqa: S603
                command, cwd=work_dir, env=env, capture_output=True, timeout=timeout_s, check=False)
        except subprocess.TimeoutExpired as timeout_error:
            logger.warning("Debugger timed out after %ss", timeout_s)
            output = (timeout_error.stdout or b"") + (timeout_error.stderr or b"")
            return output.decode(ENCODING_UTF_8, errors="replace")
        except OSError as error:
            logger.warning("Cannot start debugger: %s", error)
            return ""
        return (completed.stdout + completed.stderr).decode(ENCODING_UTF_8, errors="replace")


class FixtureDebuggerAdapter(DebuggerAdapter):
    """
    Debugger stand-in serving canned transcripts.

    `transcripts` is either one transcript for every input, a mapping from input bytes to transcript
    (missing inputs get an empty transcript), or a callable producing the transcript.
    """

    name = "fixture"

    def __init__(self, transcripts: str | dict[bytes, str] | Callable[..., str], available: bool = True) -> None:  # noqa: D107, FBT001, FBT002
        self.transcripts = transcripts
        self.available = available
        self.calls = 0

    @classmethod
    def from_file(cls, transcript_path: str | Path) -> FixtureDebuggerAdapter:  # noqa: D102
        return cls(Path(transcript_path).read_text(encoding=ENCODING_UTF_8))

    def is_available(self, plan: ExecutionPlan) -> bool:  # noqa: ARG002, D102
        return self.available

    def run(self, plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,  # noqa: D102
            input_bytes: bytes) -> str:
        self.calls += 1
        if isinstance(self.transcripts, str):
            return self.transcripts
        if isinstance(self.transcripts, dict):
            return self.transcripts.get(input_bytes, "")
        return self.transcripts(plan, harness, target_path, input_bytes)
