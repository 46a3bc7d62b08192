from __future__ import annotations

import logging
import os
import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING

from src.core.constants import ENCODING_UTF_8
from src.core.errors import ToolEnvironmentError
from src.fuzzing.models import ExecutionMode

if TYPE_CHECKING:
    from src.fuzzing.models import ExecutionPlan, HarnessSpec  # pragma: no cover

logger = logging.getLogger(__name__)


def parse_showmap(text: str) -> set[int]:
    """Parse `edge_id:hit_count` lines into the set of edge ids."""
    edges = set()
    for line in text.splitlines():
        edge, _, _ = line.strip().partition(":")
        if edge.isdigit():
            edges.add(int(edge))
    return edges


class AflShowmapOracle:
    """
    Coverage oracle backed by `afl-showmap` in QEMU mode.

    Each call runs the harness once on the input and returns the set of edges it hit.
    """

    def __init__(self, plan: ExecutionPlan, harness: HarnessSpec, target_path: str | Path,
                 executable: str = "afl-showmap") -> None:
        """
        Args:
        ----
            plan (ExecutionPlan): How the target is run; EMULATED plans pass the sysroot to QEMU.
            harness (HarnessSpec): The harness used for fuzzing the same applet.
            target_path (str | Path): The target binary.
            executable (str): Name or path of the showmap tool.

        Raises:
        ------
            ToolEnvironmentError: If the showmap tool is not installed.

        """  # noqa: D205
        if shutil.which(executable) is None:
            raise ToolEnvironmentError(f"coverage tool '{executable}'", "install AFL++")
        self.plan = plan
        self.harness = harness
        self.target_path = Path(target_path).absolute()
        self.executable = executable

    def __call__(self, seed_bytes: bytes) -> set[int]:  # noqa: D102
        with tempfile.TemporaryDirectory(prefix="firmfuzz-showmap-") as work_dir:
            input_path = Path(work_dir) / "input"
            map_path = Path(work_dir) / "map"
            input_path.write_bytes(seed_bytes)
            command = [
                self.executable, "-Q", "-q",
                "-o", str(map_path),
                "-t", str(self.harness.timeout_ms),
                "--", *self.harness.render(self.target_path, input_path),
            ]
            env = dict(self.harness.env)
            if self.plan.mode is ExecutionMode.EMULATED:
                env["QEMU_LD_PREFIX"] = str(self.plan.sysroot)
            subprocess.run(  # noqa: S603
                command,
                cwd=work_dir,
                env={**os.environ, **env},
                input=seed_bytes if self.harness.stdin_mode else None,
                capture_output=True,
                timeout=self.harness.timeout_ms / 1000 + 5,
                check=False,
            )
            if not map_path.is_file():
                msg = f"{self.executable} produced no coverage map"
                raise RuntimeError(msg)
            return parse_showmap(map_path.read_text(encoding=ENCODING_UTF_8))
