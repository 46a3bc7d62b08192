from __future__ import annotations

import re

from src.core.errors import StatsParseError, ValidationError
from src.fuzzing.models import FuzzStatsSample

_STATS_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*?)\s*$")

# Sample field -> keys accepted for it, newest fuzzer spelling first.
_FIELD_KEYS = {
    "relative_time_s": ("run_time", "relative_time"),
    "crashes_saved": ("saved_crashes", "unique_crashes"),
    "edges_found": ("edges_found",),
    "execs_done": ("execs_done",),
    "cycles_done": ("cycles_done",),
}


def parse_stats(text: str) -> FuzzStatsSample:
    """
    Parse the fuzzer's `key : value` statistics text into a sample.

    Unknown keys are ignored; counters that are absent default to zero, but the elapsed time is required.

    Raises
    ------
        StatsParseError: If the text has no elapsed time or a counter is not a non-negative integer.

    """
    values: dict[str, str] = {}
    for line in text.splitlines():
        match = _STATS_LINE.match(line)
        if match:
            values[match.group(1)] = match.group(2)
    fields: dict[str, int] = {}
    for field_name, keys in _FIELD_KEYS.items():
        key = next((key for key in keys if key in values), None)
        if key is None:
            continue
        try:
            fields[field_name] = int(values[key])
        except ValueError as error:
            msg = f"{key} is not an integer: {values[key]!r}"
            raise StatsParseError(msg) from error
    if "relative_time_s" not in fields:
        msg = "missing run_time"
        raise StatsParseError(msg)
    try:
        return FuzzStatsSample(**fields)
    except ValidationError as error:
        raise StatsParseError(str(error)) from error


def format_stats(sample: FuzzStatsSample) -> str:
    """Render a sample in the same `key : value` form `parse_stats` reads."""
    return "".join(f"{keys[0]:<18}: {getattr(sample, name)}\n" for name, keys in _FIELD_KEYS.items())
