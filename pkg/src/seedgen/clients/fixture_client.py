from __future__ import annotations

import logging
import re
import threading
from pathlib import Path
from typing import TYPE_CHECKING

from src.core.constants import ENCODING_UTF_8
from src.core.errors import InputError, ProviderError

if TYPE_CHECKING:
    from src.seedgen.models import PromptMessages, SeedProvider  # pragma: no cover

logger = logging.getLogger(__name__)

FIXTURE_MODEL_ID = "fixture"
_LEADING_NUMBER = re.compile(r"^(\d+)")


def _numbered_files(directory: Path) -> list[Path]:
    numbered = []
    for path in directory.iterdir():
        match = _LEADING_NUMBER.match(path.name)
        if path.is_file() and match:
            numbered.append((int(match.group(1)), path.name, path))
    return [path for _, _, path in sorted(numbered)]


class FixtureProvider:
    """
    Replays canned model responses from a directory of numbered text files.

    Responses are handed out in file-number order; once they run out the last one is repeated,
    so a single-file fixture answers every call identically. The loaded responses never change.
    """

    def __init__(self, responses: list[str], model_id: str = FIXTURE_MODEL_ID) -> None:
        if not responses:
            msg = "Fixture provider needs at least one response."
            raise InputError(msg)
        self.responses = tuple(responses)
        self._model_id = model_id
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_directory(cls, directory: str | Path, model_id: str = FIXTURE_MODEL_ID) -> FixtureProvider:
        """
        Load every file whose name starts with a number, e.g. '001.txt', '2.md'.

        Raises
        ------
            InputError: If the directory is missing or holds no numbered file.

        """
        directory = Path(directory)
        if not directory.is_dir():
            msg = f"Fixture directory '{directory}' does not exist."
            raise InputError(msg)
        files = _numbered_files(directory)
        if not files:
            msg = f"Fixture directory '{directory}' has no numbered response files."
            raise InputError(msg)
        logger.debug("Loaded %d fixture responses from '%s'", len(files), directory)
        return cls([file.read_text(encoding=ENCODING_UTF_8) for file in files], model_id)

    @property
    def model_id(self) -> str:  # noqa: D102
        return self._model_id

    def complete(self, messages: PromptMessages) -> str:  # noqa: ARG002, D102
        with self._lock:
            response = self.responses[min(self._cursor, len(self.responses) - 1)]
            self._cursor += 1
        return response


class RecordingProvider:
    """
    Forwards prompts to another provider and saves each answer as a numbered fixture file.

    A directory recorded this way can later be replayed offline with FixtureProvider.from_directory.
    """

    def __init__(self, provider: SeedProvider, directory: str | Path) -> None:
        self.provider = provider
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._next_number = len(_numbered_files(self.directory)) + 1

    @property
    def model_id(self) -> str:  # noqa: D102
        return self.provider.model_id

    def complete(self, messages: PromptMessages) -> str:  # noqa: D102
        response = self.provider.complete(messages)
        with self._lock:
            target = self.directory / f"{self._next_number:03d}.txt"
            self._next_number += 1
        try:
            target.write_text(response, encoding=ENCODING_UTF_8)
        except OSError as os_error:
            msg = f"Cannot record provider response to '{target}': {os_error}"
            raise ProviderError(msg) from os_error
        return response
