from __future__ import annotations

import logging
import os
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from src.core.enums import Arch, CrashSignal
from src.core.errors import InputError, ToolEnvironmentError
from src.fuzzing.models import ExecutionMode, ExecutionPlan, HarnessSpec
from src.fuzzing.process_utils import kill_tree

if TYPE_CHECKING:
    from src.inventory.models import TargetBinary  # pragma: no cover

logger = logging.getLogger(__name__)

INPUT_FILE_NAME = "input"


def plan_execution(target: TargetBinary, host_arch: Arch, sysroot: str | Path | None = None) -> ExecutionPlan:
    """
    Decide how a target binary can be run on this host.

    Args:
    ----
        target (TargetBinary): The binary to run; its architecture must be known.
        host_arch (Arch): Architecture of the host, usually `Arch.host()`.
        sysroot (str | Path | None): Library root of the firmware the target came from.

    Returns:
    -------
        ExecutionPlan: NATIVE when the architectures match, otherwise EMULATED with the sysroot.

    Raises:
    ------
        InputError: If the target architecture is UNKNOWN.
        ToolEnvironmentError: If emulation is needed but no sysroot is configured or it does not exist.

    """
    if target.arch is Arch.UNKNOWN:
        msg = f"Cannot plan execution for {target.path}: architecture {target.arch_label} is not supported."
        raise InputError(msg)
    if target.arch is host_arch:
        return ExecutionPlan.native(target.arch)
    if sysroot is None:
        raise ToolEnvironmentError(f"sysroot for {target.arch.name}", "set 'sysroots' in the tool config")
    sysroot_path = Path(sysroot)
    if not sysroot_path.is_dir():
        raise ToolEnvironmentError(f"sysroot directory {sysroot_path}")
    return ExecutionPlan(ExecutionMode.EMULATED, target.arch, sysroot_path)


def ensure_runnable(plan: ExecutionPlan) -> None:
    """Raise ToolEnvironmentError when the emulator an EMULATED plan needs is not installed."""
    if plan.mode is ExecutionMode.EMULATED and shutil.which(plan.emulator or "") is None:
        raise ToolEnvironmentError(f"emulator '{plan.emulator}'", "install qemu-user")


@dataclass(frozen=True)
class ExecutionRun:
    """
    Outcome of a single execution of the harness.

    `returncode` follows subprocess conventions: a negative value is the number of the terminating signal.
    It is None when the run timed out or could not be launched.
    """

    returncode: int | None
    wall_time_ms: int
    stdout: bytes = b""
    stderr: bytes = b""
    timed_out: bool = False
    launch_error: str | None = None

    @property
    def signal(self) -> CrashSignal | None:  # noqa: D102
        if self.returncode is None or self.returncode >= 0:
            return None
        return CrashSignal(-self.returncode)


def build_command(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,
                  input_path: str | Path | None) -> list[str]:
    """Return the full argv: emulator prefix (if any) followed by the rendered harness template."""
    return [*plan.command_prefix(), *harness.render(target_path, input_path)]


def execute_once(plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path, input_bytes: bytes,
                 timeout_ms: int | None = None) -> ExecutionRun:
    """
    Run the harness once on an input in a fresh working directory.

    The process gets its own session so that a timeout can take down the whole process tree.
    """
    timeout_ms = timeout_ms or harness.timeout_ms
    env = {**os.environ, **harness.env}
    if plan.mode is ExecutionMode.EMULATED:
        env["QEMU_LD_PREFIX"] = str(plan.sysroot)
    with tempfile.TemporaryDirectory(prefix="firmfuzz-run-") as work_dir:
        input_path = None
        if harness.uses_input_file:
            input_path = Path(work_dir) / INPUT_FILE_NAME
            input_path.write_bytes(input_bytes)
        argv = build_command(plan, harness, Path(target_path).absolute(), input_path)
        started = time.monotonic()
        try:
            process = subprocess.Popen(  # noqa: S603
                argv,
                cwd=work_dir,
                env=env,
                stdin=subprocess.PIPE if harness.stdin_mode else subprocess.DEVNULL,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                start_new_session=True,
            )
        except OSError as error:
            logger.debug("Cannot launch %s: %s", argv[0], error)
            return ExecutionRun(None, 0, launch_error=str(error))
        try:
            stdout, stderr = process.communicate(
                input=input_bytes if harness.stdin_mode else None, timeout=timeout_ms / 1000)
        except subprocess.TimeoutExpired:
            kill_tree(process.pid)
            stdout, stderr = process.communicate()
            wall_time_ms = int((time.monotonic() - started) * 1000)
            return ExecutionRun(None, wall_time_ms, stdout, stderr, timed_out=True)
        wall_time_ms = int((time.monotonic() - started) * 1000)
    return ExecutionRun(process.returncode, wall_time_ms, stdout, stderr)
