"""Result tables and their CSV form.

The CSV layout is a block of ``# key: value`` metadata lines, a header
row, then one row per lattice index. Floats are written with ``repr``
(shortest round-trip decimal, always with '.' as the decimal point) and
lines end with ``\\n``, so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ResultTable", "format_value", "emit_csv", "to_csv_text"]


@dataclass
class ResultTable:
    """Named columns over a common index column ``n`` plus ordered metadata."""

    columns: list
    data: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        lengths = {len(self.data.get(c, ())) for c in self.columns}
        missing = [c for c in self.columns if c not in self.data]
        if missing:
            raise ValueError(f"columns without data: {missing}")
        if len(lengths) > 1:
            raise ValueError("columns must all have the same length")

    @property
    def n_rows(self) -> int:
        return len(self.data[self.columns[0]]) if self.columns else 0

    def column(self, name) -> np.ndarray:
        return np.asarray(self.data[name])

    def rows(self):
        cols = [self.data[c] for c in self.columns]
        for i in range(self.n_rows):
            yield [col[i] for col in cols]


def format_value(v) -> str:
    """Deterministic, locale-free text for one cell or metadata value."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return repr(f)
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}={format_value(x)}" for k, x in v.items()) + "}"
    return str(v).replace("\n", " ")


def to_csv_text(table: ResultTable) -> str:
    buf = io.StringIO()
    for key, value in table.metadata.items():
        buf.write(f"# {key}: {format_value(value)}\n")
    for w in table.warnings:
        buf.write(f"# warning: {format_value(w)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows():
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def emit_csv(table: ResultTable, destination=None) -> None:
    """Write ``table`` to a path, a text stream, or stdout when ``None``."""
    text = to_csv_text(table)
    if destination is None:
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
