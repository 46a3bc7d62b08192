from __future__ import annotations

import logging
import random
from typing import TYPE_CHECKING

from src.core.enums import SeedOrigin
from src.core.errors import GenerationError, InputError
from src.seedgen.models import Seed, SeedCorpus
from src.seedgen.prompt import build_prompt, parse_seed_response, prompt_sha256

if TYPE_CHECKING:
    from src.seedgen.models import SeedProvider  # pragma: no cover

logger = logging.getLogger(__name__)

# Printable ASCII without whitespace control characters: space through tilde.
PRINTABLE_ALPHABET = bytes(range(0x20, 0x7F))
RANDOM_DRAWS_PER_SEED = 100


def generate_llm_corpus(provider: SeedProvider, applet: str, min_seeds: int, max_attempts: int) -> SeedCorpus:
    """
    Ask the model for seeds until at least `min_seeds` distinct ones are collected.

    Each attempt sends the same prompt; answers are merged and deduplicated byte-wise across attempts.
    If the attempts run out with some seeds but fewer than requested, the partial corpus is returned and
    its metadata carries a 'warning' entry.

    Args:
    ----
        provider (SeedProvider): The live or fixture chat model.
        applet (str): The applet to generate seeds for.
        min_seeds (int): The number of distinct seeds wanted (>= 1).
        max_attempts (int): The maximum number of provider calls (>= 1).

    Returns:
    -------
        SeedCorpus: LLM seeds labelled '<applet>-NNN'.

    Raises:
    ------
        InputError: If `min_seeds` or `max_attempts` is below 1.
        ProviderError: If the provider fails (propagated after its own retries).
        GenerationError: If no attempt produced a usable seed.

    """
    if min_seeds < 1 or max_attempts < 1:
        msg = "min_seeds and max_attempts must be at least 1."
        raise InputError(msg)
    messages = build_prompt(applet)
    collected: dict[bytes, None] = {}
    attempts = 0
    while attempts < max_attempts and len(collected) < min_seeds:
        attempts += 1
        response = provider.complete(messages)
        parsed = parse_seed_response(response)
        logger.debug("Attempt %d for '%s' returned %d candidate seeds", attempts, applet, len(parsed))
        for seed in parsed:
            collected.setdefault(seed.content, None)
    if not collected:
        msg = f"No seeds for applet '{applet}' after {attempts} attempt(s)."
        raise GenerationError(msg)
    metadata = {
        "applet": applet,
        "origin": SeedOrigin.LLM.value,
        "model_id": provider.model_id,
        "prompt_sha256": prompt_sha256(messages),
        "attempts": str(attempts),
    }
    if len(collected) < min_seeds:
        metadata["warning"] = f"partial corpus: {len(collected)} of {min_seeds} requested seeds"
        logger.warning("Only %d of %d requested seeds generated for '%s'.", len(collected), min_seeds, applet)
    seeds = [Seed(content, SeedOrigin.LLM, f"{applet}-{idx:03d}") for idx, content in enumerate(collected)]
    return SeedCorpus(seeds, applet, metadata)


def generate_random_corpus(count: int, min_len: int, max_len: int, rng_seed: int,
                           applet: str = "random") -> SeedCorpus:
    """
    Generate the control corpus: `count` distinct seeds of random printable ASCII.

    Lengths are uniform in [min_len, max_len]; the result depends only on the arguments.

    Raises
    ------
        InputError: If count < 1, min_len < 1, min_len > max_len, or the length range cannot hold `count`
        distinct seeds.

    """
    if count < 1 or min_len < 1 or min_len > max_len:
        msg = f"Invalid random corpus parameters: count={count}, min_len={min_len}, max_len={max_len}."
        raise InputError(msg)
    rng = random.Random(rng_seed)  # noqa: S311
    contents: dict[bytes, None] = {}
    draws = 0
    while len(contents) < count:
        if draws >= count * RANDOM_DRAWS_PER_SEED:
            msg = f"Cannot draw {count} distinct seeds of length {min_len}..{max_len}."
            raise InputError(msg)
        draws += 1
        length = rng.randint(min_len, max_len)
        contents.setdefault(bytes(rng.choice(PRINTABLE_ALPHABET) for _ in range(length)), None)
    seeds = [Seed(content, SeedOrigin.RANDOM, f"random-{idx:03d}") for idx, content in enumerate(contents)]
    metadata = {"applet": applet, "origin": SeedOrigin.RANDOM.value, "rng_seed": str(rng_seed)}
    return SeedCorpus(seeds, applet, metadata)
