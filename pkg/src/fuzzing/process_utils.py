from __future__ import annotations

import logging

import psutil

logger = logging.getLogger(__name__)


def _tree(pid: int) -> list[psutil.Process]:
    try:
        parent = psutil.Process(pid)
        return [*parent.children(recursive=True), parent]
    except psutil.NoSuchProcess:
        return []


def terminate_tree(pid: int, grace_period_s: float) -> None:
    """
    Send SIGTERM to a process and its descendants, then SIGKILL whatever survives the grace period.

    Args:
    ----
        pid (int): Root of the process tree.
        grace_period_s (float): How long to wait for a graceful exit.

    """
    processes = _tree(pid)
    for process in processes:
        try:
            process.terminate()
        except psutil.NoSuchProcess:
            continue
    _, alive = psutil.wait_procs(processes, timeout=grace_period_s)
    if alive:
        logger.debug("Killing %d processes that ignored SIGTERM", len(alive))
    kill_processes(alive)


def kill_tree(pid: int) -> None:  # noqa: D103
    kill_processes(_tree(pid))


def kill_processes(processes: list[psutil.Process]) -> None:  # noqa: D103
    for process in processes:
        try:
            process.kill()
        except psutil.NoSuchProcess:
            continue
    psutil.wait_procs(processes, timeout=1)
