from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Protocol

from src.core.constants import (
    DEFAULT_CHAT_COMPLETIONS_URL,
    DEFAULT_CREDENTIALS_ENV_VAR,
    DEFAULT_MAX_RESPONSE_BYTES,
    DEFAULT_MODEL_ID,
    DEFAULT_TEMPERATURE,
)
from src.core.enums import SeedOrigin
from src.core.errors import ConfigError, ProviderError, ValidationError

MAX_TEMPERATURE = 2.0

# Ordered (role, content) pairs sent to a chat model.
PromptMessages = list[tuple[str, str]]


@dataclass(frozen=True)
class ProviderConfig:
    """
    Settings of the chat model used to generate seeds.

    The credential itself is never stored here: `credentials_env_var` names the environment variable to read it from.
    """

    model_id: str = DEFAULT_MODEL_ID
    temperature: float = DEFAULT_TEMPERATURE
    max_response_bytes: int = DEFAULT_MAX_RESPONSE_BYTES
    endpoint: str = DEFAULT_CHAT_COMPLETIONS_URL
    credentials_env_var: str = DEFAULT_CREDENTIALS_ENV_VAR

    def __post_init__(self) -> None:  # noqa: D105
        if not self.model_id or not self.model_id.strip():
            msg = "Provider model_id must not be empty."
            raise ConfigError(msg)
        if not 0 <= self.temperature <= MAX_TEMPERATURE:
            msg = f"Provider temperature {self.temperature} is outside [0, {MAX_TEMPERATURE}]."
            raise ConfigError(msg)
        if self.max_response_bytes <= 0:
            msg = "Provider max_response_bytes must be positive."
            raise ConfigError(msg)

    def read_credential(self) -> str:
        """
        Return the API credential from the configured environment variable.

        Raises
        ------
            ProviderError: If the variable is unset or empty.

        """
        credential = os.getenv(self.credentials_env_var, "")
        if not credential:
            msg = f"Environment variable '{self.credentials_env_var}' with the provider credential is not set."
            raise ProviderError(msg)
        return credential


@dataclass(frozen=True)
class Seed:  # noqa: D101
    content: bytes
    origin: SeedOrigin
    label: str

    def __post_init__(self) -> None:  # noqa: D105
        if not self.content:
            msg = f"Seed '{self.label}' is empty."
            raise ValidationError(msg)


@dataclass
class SeedCorpus:
    """
    A set of initial fuzzer inputs for one applet.

    Seeds with byte-identical content are dropped at construction, keeping the first occurrence.
    """

    seeds: list[Seed]
    applet: str
    generation_metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:  # noqa: D105
        seen: set[bytes] = set()
        unique_seeds = []
        for seed in self.seeds:
            if seed.content not in seen:
                seen.add(seed.content)
                unique_seeds.append(seed)
        self.seeds = unique_seeds

    def __len__(self) -> int:  # noqa: D105
        return len(self.seeds)

    @property
    def origin(self) -> SeedOrigin | None:
        """The common origin of all seeds, or None for a mixed or empty corpus."""
        origins = {seed.origin for seed in self.seeds}
        return origins.pop() if len(origins) == 1 else None


class SeedProvider(Protocol):
    """A chat model that answers a prompt with text."""

    @property
    def model_id(self) -> str: ...  # noqa: D102

    def complete(self, messages: PromptMessages) -> str: ...  # noqa: D102


class CoverageOracle(Protocol):
    """Measures the edges one input covers; deterministic for a fixed target binary."""

    def __call__(self, seed_bytes: bytes) -> set[int]: ...  # noqa: D102
