from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

from src.core.errors import InputError
from src.seedgen.models import SeedCorpus

if TYPE_CHECKING:
    from src.seedgen.models import CoverageOracle, Seed  # pragma: no cover

logger = logging.getLogger(__name__)


def _measure(oracle: CoverageOracle, seed: Seed) -> tuple[frozenset[int], str | None]:
    try:
        return frozenset(oracle(seed.content)), None
    except Exception as error:  # noqa: BLE001
        logger.debug("Coverage oracle failed on seed '%s': %s", seed.label, error)
        return frozenset(), str(error) or type(error).__name__


def minimize_corpus(corpus: SeedCorpus, oracle: CoverageOracle, parallelism: int = 1) -> SeedCorpus:
    """
    Keep a small subset of seeds that covers every edge the whole corpus covers.

    Greedy set cover: repeatedly take the seed adding the most uncovered edges, ties going to the shorter
    seed and then the smaller label. Seeds with no coverage, including those the oracle failed on, are dropped.
    Kept seeds stay in their original order, which makes the operation idempotent.

    Args:
    ----
        corpus (SeedCorpus): The corpus to minimize; must not be empty.
        oracle (CoverageOracle): Edge-set measurement for one input.
        parallelism (int): How many oracle calls may run at once.

    Returns:
    -------
        SeedCorpus: The kept seeds, with 'minimized', 'dropped' and 'oracle_failures' metadata entries.

    Raises:
    ------
        InputError: If the corpus is empty.

    """
    if not corpus.seeds:
        msg = "Cannot minimize an empty corpus."
        raise InputError(msg)
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as executor:
        measurements = list(executor.map(lambda seed: _measure(oracle, seed), corpus.seeds))
    # Seeds are tracked by position; labels may repeat.
    coverage = [edges for edges, _ in measurements]
    failures = sorted(seed.label for seed, (_, error) in zip(corpus.seeds, measurements, strict=True) if error)

    uncovered = set().union(*coverage)
    candidates = [index for index, edges in enumerate(coverage) if edges]
    chosen: set[int] = set()
    while uncovered:
        best = min(
            (index for index in candidates if index not in chosen),
            key=lambda index: (-len(coverage[index] & uncovered), len(corpus.seeds[index].content),
                               corpus.seeds[index].label, index),
        )
        chosen.add(best)
        uncovered -= coverage[best]

    kept = [seed for index, seed in enumerate(corpus.seeds) if index in chosen]
    dropped = [seed.label for index, seed in enumerate(corpus.seeds) if index not in chosen]
    metadata = dict(corpus.generation_metadata)
    metadata.update({
        "minimized": "true",
        "dropped": ",".join(dropped),
        "oracle_failures": ",".join(failures),
    })
    logger.info("Corpus for '%s' minimized from %d to %d seeds.", corpus.applet, len(corpus.seeds), len(kept))
    return SeedCorpus(kept, corpus.applet, metadata)
