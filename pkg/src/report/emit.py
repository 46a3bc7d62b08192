from __future__ import annotations

import csv
import io
import json
from typing import TYPE_CHECKING, Any

from src.core.constants import ENCODING_UTF_8
from src.core.enums import ReportFormat

if TYPE_CHECKING:
    from src.report.models import Tabular  # pragma: no cover

GNUPLOT_MISSING = "NaN"


def _gnuplot_cell(value: Any) -> str:  # noqa: ANN401
    if value is None:
        return GNUPLOT_MISSING
    text = str(value)
    if not text or any(character.isspace() or character == '"' for character in text):
        return '"' + text.replace('"', "'") + '"'
    return text


def emit(table: Tabular, output_format: ReportFormat | str) -> bytes:
    """
    Serialize a table as CSV, JSON or gnuplot data columns.

    Output is UTF-8 with LF line endings and depends only on the input: CSV and gnuplot keep the
    table's column order, JSON sorts its keys.

    Raises
    ------
        UnsupportedFormatError: If the format tag is unknown.

    """
    if isinstance(output_format, str):
        output_format = ReportFormat.from_string(output_format)
    if output_format is ReportFormat.JSON:
        text = json.dumps(table.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    elif output_format is ReportFormat.CSV:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(["" if value is None else value for value in row] for row in table.as_rows())
        text = buffer.getvalue()
    else:
        lines = ["# " + " ".join(table.columns)]
        lines.extend(" ".join(_gnuplot_cell(value) for value in row) for row in table.as_rows())
        text = "\n".join(lines) + "\n"
    return text.encode(ENCODING_UTF_8)
