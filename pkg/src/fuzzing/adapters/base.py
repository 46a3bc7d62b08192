from __future__ import annotations

import time
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Protocol

from src.core.enums import CrashSignal
from src.fuzzing.models import HarvestedCrash

if TYPE_CHECKING:
    from pathlib import Path  # pragma: no cover

    from src.fuzzing.models import CampaignConfig, ExecutionPlan  # pragma: no cover


class Clock(Protocol):
    """Time source of the supervisor loop; adapters that simulate a fuzzer bring their own."""

    def monotonic(self) -> float: ...  # noqa: D102

    def sleep(self, seconds: float) -> None: ...  # noqa: D102


class SystemClock:  # noqa: D101
    def monotonic(self) -> float:  # noqa: D102
        return time.monotonic()

    def sleep(self, seconds: float) -> None:  # noqa: D102
        time.sleep(seconds)


class FuzzerProcess(ABC):
    """Handle on a running fuzzer, with subprocess-style return codes (negative means killed by a signal)."""

    clock: Clock = SystemClock()

    @abstractmethod
    def poll(self) -> int | None: ...  # noqa: D102

    @abstractmethod
    def terminate(self) -> None: ...  # noqa: D102

    @abstractmethod
    def kill(self) -> None: ...  # noqa: D102

    @abstractmethod
    def wait(self, timeout_s: float) -> int | None:
        """Wait up to `timeout_s` for the process to exit and return its code, or None if it is still running."""


class FuzzerAdapter(ABC):
    """
    Drives one external fuzzer.

    An adapter knows how to spawn the fuzzer for a campaign and where the fuzzer keeps its statistics,
    crashing inputs and queue under the campaign output directory.
    """

    name = "fuzzer"

    @abstractmethod
    def is_available(self) -> bool: ...  # noqa: D102

    @abstractmethod
    def spawn(self, config: CampaignConfig, plan: ExecutionPlan, corpus_dir: Path) -> FuzzerProcess:
        """
        Start the fuzzer for a campaign.

        Raises
        ------
            OSError: If the fuzzer cannot be launched.

        """

    @abstractmethod
    def stats_path(self, output_dir: Path) -> Path: ...  # noqa: D102

    @abstractmethod
    def crash_dir(self, output_dir: Path) -> Path: ...  # noqa: D102

    @abstractmethod
    def queue_dir(self, output_dir: Path) -> Path: ...  # noqa: D102

    def is_catastrophic_exit(self, returncode: int) -> bool:
        """Whether the fuzzer process itself died from a crash signal."""
        return returncode < 0 and CrashSignal(-returncode).is_crash

    def harvest_crashes(self, output_dir: Path) -> list[HarvestedCrash]:
        """Read the saved crashing inputs, parsing `sig:NN` out of their file names when present."""
        crash_dir = self.crash_dir(output_dir)
        if not crash_dir.is_dir():
            return []
        crashes = []
        for path in sorted(crash_dir.iterdir()):
            if not path.is_file() or path.name.startswith(("README", ".")):
                continue
            crashes.append(HarvestedCrash(path.name, path.read_bytes(), CrashSignal.from_crash_file_name(path.name)))
        return crashes

    def queue_size(self, output_dir: Path) -> int:  # noqa: D102
        queue_dir = self.queue_dir(output_dir)
        if not queue_dir.is_dir():
            return 0
        return sum(1 for path in queue_dir.iterdir() if path.is_file() and not path.name.startswith("."))
