from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import pairwise
from typing import Any, Protocol

from src.core.enums import SeedOrigin
from src.core.errors import InputError, ValidationError
from src.fuzzing.models import FuzzStatsSample


class Tabular(Protocol):
    """Anything `emit` can write: named columns, rows in column order, and a JSON form."""

    columns: tuple[str, ...]

    def as_rows(self) -> list[tuple[Any, ...]]: ...  # noqa: D102

    def to_dict(self) -> dict[str, Any]: ...  # noqa: D102


class Condition(Enum):
    """Seed condition of a campaign: LLM seeds or random seeds."""

    WITH_LLM = "with_llm"
    WITHOUT_LLM = "without_llm"

    @staticmethod
    def from_seed_origin(origin: str | None) -> Condition:  # noqa: D102
        if origin == SeedOrigin.LLM.value:
            return Condition.WITH_LLM
        if origin == SeedOrigin.RANDOM.value:
            return Condition.WITHOUT_LLM
        msg = f"Seed origin '{origin}' is neither llm nor random."
        raise InputError(msg)


@dataclass(frozen=True)
class ConditionSeries:
    """Stats series of one campaign, labelled with its seed condition."""

    condition: Condition
    series: tuple[FuzzStatsSample, ...]
    target_id: str
    applet: str

    def __post_init__(self) -> None:  # noqa: D105
        object.__setattr__(self, "series", tuple(self.series))
        times = [sample.relative_time_s for sample in self.series]
        if any(later < earlier for earlier, later in pairwise(times)):
            msg = f"Series for {self.target_id}/{self.applet} is not ordered by time."
            raise InputError(msg)

    @property
    def final(self) -> FuzzStatsSample:  # noqa: D102
        return self.series[-1] if self.series else FuzzStatsSample(0)

    def value_at(self, time_s: int, name: str) -> int:
        """Step interpolation: the last observation at or before `time_s`, zero before the first."""
        value = 0
        for sample in self.series:
            if sample.relative_time_s > time_s:
                break
            value = getattr(sample, name)
        return value

    @staticmethod
    def from_dump(document: dict[str, Any], condition: Condition | None = None) -> ConditionSeries:
        """Build a series from a campaign stats dump; the condition defaults to the dump's seed origin."""
        try:
            samples = tuple(FuzzStatsSample(**sample) for sample in document.get("series", []))
            return ConditionSeries(
                condition=condition or Condition.from_seed_origin(document.get("seed_origin")),
                series=samples,
                target_id=document["target_hash"],
                applet=document["applet"],
            )
        except (KeyError, TypeError, ValidationError) as error:
            msg = f"Not a campaign stats dump: {error}"
            raise InputError(msg) from error


COMPARED_FIELDS = (("crashes", "crashes_saved"), ("edges", "edges_found"), ("execs", "execs_done"))


@dataclass(frozen=True)
class ComparisonTable:
    """Two condition series aligned on time, plus their final values and deltas (b minus a)."""

    label_a: str
    label_b: str
    rows: tuple[tuple[int, ...], ...]
    summary: dict[str, int] = field(default_factory=dict)

    columns = ("relative_time_s", "crashes_a", "crashes_b", "edges_a", "edges_b", "execs_a", "execs_b")

    def as_rows(self) -> list[tuple[Any, ...]]:  # noqa: D102
        return list(self.rows)

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return {
            "label_a": self.label_a,
            "label_b": self.label_b,
            "columns": list(self.columns),
            "rows": [list(row) for row in self.rows],
            "summary": dict(self.summary),
        }


@dataclass(frozen=True)
class OverlapCounts:  # noqa: D101
    only_a: int
    only_b: int
    common: int
    label_a: str = "a"
    label_b: str = "b"

    columns = ("label_a", "label_b", "only_a", "only_b", "common")

    def __post_init__(self) -> None:  # noqa: D105
        if min(self.only_a, self.only_b, self.common) < 0:
            msg = "Overlap counts must not be negative."
            raise ValidationError(msg)

    def as_rows(self) -> list[tuple[Any, ...]]:  # noqa: D102
        return [(self.label_a, self.label_b, self.only_a, self.only_b, self.common)]

    def to_dict(self) -> dict[str, Any]:  # noqa: D102
        return dict(zip(self.columns, self.as_rows()[0], strict=True))
