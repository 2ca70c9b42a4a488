"""Tabular experiment reports with CSV, JSON and gnuplot writers."""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field

CSV_FIELDS = ("label", "x", "h", "value", "main_term", "ratio", "residual")


@dataclass
class ReportRow:
    label: str
    x: int
    h: int
    value: float
    main_term: float | None = None
    ratio: float | None = None
    residual: float | None = None


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def add(self, label, x, h, value, main_term=None, residual=None) -> ReportRow:
        value = float(value)
        ratio = None
        if main_term is not None:
            main_term = float(main_term)
            ratio = value / main_term if main_term != 0 else None
            if residual is None:
                residual = value - main_term
        row = ReportRow(label, int(x), int(h), value, main_term, ratio, None if residual is None else float(residual))
        self.rows.append(row)
        return row

    def get(self, label: str) -> ReportRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)

    def extend(self, other: "ExperimentReport") -> None:
        self.rows += other.rows
        self.warnings += other.warnings

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.metadata.items():
            buf.write(f"# {key}={_fmt(val)}\n")
        for msg in self.warnings:
            buf.write(f"# warning: {msg}\n")
        buf.write(",".join(CSV_FIELDS) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(getattr(row, f)) for f in CSV_FIELDS) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "config": self.metadata,
            "warnings": self.warnings,
            "rows": [asdict(r) for r in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_gnuplot(self) -> str:
        """Two columns (x, ratio) for every row that has a ratio."""
        lines = ["# x ratio"]
        lines += [f"{r.x} {_fmt(r.ratio)}" for r in self.rows if r.ratio is not None]
        return "\n".join(lines) + "\n"


def _fmt(val) -> str:
    if val is None:
        return ""
    if isinstance(val, float):
        if math.isnan(val) or math.isinf(val):
            return str(val)
        return repr(val)
    return str(val)
