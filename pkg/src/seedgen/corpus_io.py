from __future__ import annotations

import json
import logging
from datetime import UTC, datetime
from pathlib import Path

from src.core.constants import CORPUS_META_FILE, ENCODING_UTF_8
from src.core.enums import SeedOrigin
from src.core.errors import InputError
from src.seedgen.models import Seed, SeedCorpus
from src.utils import safe_join

logger = logging.getLogger(__name__)

SIDECAR_KEYS = ("applet", "origin", "model_id", "prompt_sha256", "rng_seed", "created_at")


def write_corpus(corpus: SeedCorpus, out_dir: str | Path) -> Path:
    """
    Materialize a corpus as one file per seed plus the `corpus.meta.json` sidecar.

    Seed files are named after their labels. The sidecar always carries the documented keys
    (empty string when unknown) followed by any other metadata entries.

    Returns
    -------
        Path: The corpus directory.

    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    for seed in corpus.seeds:
        Path(safe_join(str(out_path), seed.label)).write_bytes(seed.content)
    metadata = {key: corpus.generation_metadata.get(key, "") for key in SIDECAR_KEYS}
    metadata["applet"] = metadata["applet"] or corpus.applet
    metadata["origin"] = metadata["origin"] or (corpus.origin.value if corpus.origin else "")
    metadata["created_at"] = metadata["created_at"] or datetime.now(UTC).isoformat(timespec="seconds")
    metadata.update({key: value for key, value in corpus.generation_metadata.items() if key not in SIDECAR_KEYS})
    (out_path / CORPUS_META_FILE).write_text(json.dumps(metadata, indent=2, sort_keys=False) + "\n",
                                             encoding=ENCODING_UTF_8)
    logger.debug("Wrote %d seeds to '%s'", len(corpus.seeds), out_path)
    return out_path


def read_corpus(corpus_dir: str | Path, applet: str | None = None) -> SeedCorpus:
    """
    Load a corpus directory written by `write_corpus` or any plain directory of input files.

    Without a sidecar, seeds are tagged CRASH_IMPORT and the applet falls back to `applet`, then to the
    directory name. Empty files are skipped.

    Raises
    ------
        InputError: If the directory is missing or contains no usable seed.

    """
    corpus_path = Path(corpus_dir)
    if not corpus_path.is_dir():
        msg = f"Corpus directory '{corpus_path}' does not exist."
        raise InputError(msg)
    meta_path = corpus_path / CORPUS_META_FILE
    metadata: dict[str, str] = {}
    if meta_path.is_file():
        try:
            metadata = {key: str(value) for key, value in json.loads(meta_path.read_text(ENCODING_UTF_8)).items()}
        except json.JSONDecodeError as decode_error:
            msg = f"Corpus metadata '{meta_path}' is not valid JSON."
            raise InputError(msg) from decode_error
    origin_value = metadata.get("origin") or SeedOrigin.CRASH_IMPORT.value
    try:
        origin = SeedOrigin(origin_value)
    except ValueError:
        origin = SeedOrigin.CRASH_IMPORT
    seeds = [
        Seed(path.read_bytes(), origin, path.name)
        for path in sorted(corpus_path.iterdir())
        if path.is_file() and path.name != CORPUS_META_FILE and path.stat().st_size > 0
    ]
    if not seeds:
        msg = f"Corpus directory '{corpus_path}' holds no seeds."
        raise InputError(msg)
    return SeedCorpus(seeds, applet or metadata.get("applet") or corpus_path.name, metadata)
