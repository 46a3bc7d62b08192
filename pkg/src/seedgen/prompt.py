from __future__ import annotations

import json
import re

from src.core.enums import SeedOrigin
from src.core.errors import InputError
from src.inventory.fingerprint import fingerprint
from src.seedgen.models import PromptMessages, Seed

SYSTEM_PROMPT_TEMPLATE = (
    "You are initial seed generator for a fuzzer that has to fuzz BusyBox {applet} applet. "
    "In response only provide the list of {applet} scripts"
)
USER_PROMPT_TEMPLATE = "Generate initial seed to fuzz BusyBox {applet} applet"

CODE_FENCE_PATTERN = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
LIST_ITEM_PATTERN = re.compile(r"^\s*(?:\d+[.)]|[-*•])\s+(.*\S)\s*$", re.MULTILINE)
INLINE_CODE_PATTERN = re.compile(r"^`([^`]+)`$")


def build_prompt(applet: str) -> PromptMessages:
    """
    Build the two chat messages asking for seeds of one applet.

    Args:
    ----
        applet (str): The applet name, e.g. "awk".

    Returns:
    -------
        PromptMessages: [("system", ...), ("user", ...)].

    Raises:
    ------
        InputError: If the applet name is empty.

    Example:
    -------
        >>> build_prompt("dc")[1]
        ('user', 'Generate initial seed to fuzz BusyBox dc applet')

    """
    if not applet or not applet.strip():
        msg = "Applet name must not be empty."
        raise InputError(msg)
    applet = applet.strip()
    return [
        ("system", SYSTEM_PROMPT_TEMPLATE.format(applet=applet)),
        ("user", USER_PROMPT_TEMPLATE.format(applet=applet)),
    ]


def prompt_sha256(messages: PromptMessages) -> str:
    """Hash the prompt so corpora can record exactly what was asked."""
    return fingerprint(json.dumps(messages, ensure_ascii=False).encode())


def _split_candidates(response_text: str) -> list[str]:
    blocks = CODE_FENCE_PATTERN.findall(response_text)
    if blocks:
        return blocks
    items = LIST_ITEM_PATTERN.findall(response_text)
    if items:
        # A list item that is a single inline code span keeps only the code.
        return [INLINE_CODE_PATTERN.sub(r"\1", item) for item in items]
    return response_text.splitlines()


def parse_seed_response(response_text: str) -> list[Seed]:
    """
    Split a model response into individual seeds.

    Candidates come from fenced code blocks if there are any, otherwise from numbered or bulleted
    list items, otherwise from non-empty lines. Each candidate is trimmed; empty and byte-identical
    candidates are dropped. An empty list tells the caller to ask again.
    """
    seeds: list[Seed] = []
    seen: set[bytes] = set()
    for candidate in _split_candidates(response_text):
        content = candidate.strip().encode()
        if not content or content in seen:
            continue
        seen.add(content)
        seeds.append(Seed(content, SeedOrigin.LLM, f"seed-{len(seeds):03d}"))
    return seeds
