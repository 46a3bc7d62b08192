from __future__ import annotations

from typing import TYPE_CHECKING

from src.core.errors import InputError
from src.report.models import COMPARED_FIELDS, ComparisonTable, ConditionSeries, OverlapCounts

if TYPE_CHECKING:
    from collections.abc import Iterable, Set  # pragma: no cover

    from src.crashdb.models import CrashSignature  # pragma: no cover


def compare_conditions(a: ConditionSeries, b: ConditionSeries) -> ComparisonTable:
    """
    Align two campaign series of the same target and applet on time.

    Every time point of either series gets a row; values between samples carry the last observation
    forward. The summary holds the final crashes, edges and execs of both sides and their deltas.

    Raises
    ------
        InputError: If the series are for different targets or applets.

    """
    if (a.target_id, a.applet) != (b.target_id, b.applet):
        msg = f"Cannot compare {a.target_id}/{a.applet} with {b.target_id}/{b.applet}."
        raise InputError(msg)
    times = sorted({sample.relative_time_s for sample in (*a.series, *b.series)})
    rows = []
    for time_s in times:
        row = [time_s]
        for _, field_name in COMPARED_FIELDS:
            row.extend((a.value_at(time_s, field_name), b.value_at(time_s, field_name)))
        rows.append(tuple(row))
    summary = {}
    for label, field_name in COMPARED_FIELDS:
        final_a, final_b = getattr(a.final, field_name), getattr(b.final, field_name)
        summary[f"final_{label}_a"] = final_a
        summary[f"final_{label}_b"] = final_b
        summary[f"delta_{label}"] = final_b - final_a
    return ComparisonTable(a.condition.value, b.condition.value, tuple(rows), summary)


def overlap(a: Iterable[CrashSignature] | Set[CrashSignature], b: Iterable[CrashSignature],
            label_a: str = "a", label_b: str = "b") -> OverlapCounts:
    """Count signatures only in `a`, only in `b`, and in both."""
    set_a, set_b = set(a), set(b)
    return OverlapCounts(len(set_a - set_b), len(set_b - set_a), len(set_a & set_b), label_a, label_b)
