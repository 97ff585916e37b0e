"""Result tables and their CSV / JSON serialisation."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from ..errors import ConvergenceFailure, InvalidArgument

__all__ = ["SweepSpec", "ResultTable", "read_csv", "read_json", "CONVERGED", "EXACT", "UNCONVERGED"]

EXACT = "exact"
CONVERGED = "converged"
UNCONVERGED = "unconverged"


@dataclass(frozen=True)
class SweepSpec:
    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"
    fixed: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.min < self.max:
            raise InvalidArgument(f"sweep {self.name}: need min < max")
        if self.count < 2:
            raise InvalidArgument(f"sweep {self.name}: need at least 2 points")
        if self.scale not in ("linear", "log"):
            raise InvalidArgument(f"sweep {self.name}: scale must be linear or log")
        if self.scale == "log" and not self.min > 0:
            raise InvalidArgument(f"sweep {self.name}: log scale needs min > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)

    def describe(self) -> dict:
        return {"name": self.name, "min": self.min, "max": self.max, "count": self.count,
                "scale": self.scale, "fixed": dict(self.fixed)}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class ResultTable:
    """Rectangular numeric table with a metadata block.

    ``row_status`` holds one convergence status per row and is always written
    into the metadata.
    """

    def __init__(self, columns: Sequence[str], metadata: dict | None = None):
        self.columns = list(columns)
        self.rows: List[list] = []
        self.row_status: List[str] = []
        self.row_notes: List[str] = []
        self.metadata = dict(metadata or {})

    def add_row(self, values: Sequence, status: str = EXACT, note: str = "") -> None:
        if len(values) != len(self.columns):
            raise InvalidArgument(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))
        self.row_status.append(status)
        self.row_notes.append(note)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def where(self, **conditions) -> "ResultTable":
        out = ResultTable(self.columns, self.metadata)
        idx = {k: self.columns.index(k) for k in conditions}
        for row, status, note in zip(self.rows, self.row_status, self.row_notes):
            if all(math.isclose(row[idx[k]], v, rel_tol=1e-12, abs_tol=1e-15) for k, v in conditions.items()):
                out.add_row(row, status, note)
        return out

    def full_metadata(self) -> dict:
        meta = dict(self.metadata)
        meta["row_status"] = list(self.row_status)
        if any(self.row_notes):
            meta["row_notes"] = list(self.row_notes)
        return meta

    def check_converged(self, allow_unconverged: bool) -> None:
        bad = [i for i, s in enumerate(self.row_status) if s == UNCONVERGED]
        if bad and not allow_unconverged:
            detail = "; ".join(self.row_notes[i] for i in bad if self.row_notes[i])[:500]
            raise ConvergenceFailure(
                f"{len(bad)} of {len(self.rows)} rows failed the convergence check"
                + (f" ({detail})" if detail else "")
                + "; rerun with --allow-unconverged to write them anyway"
            )

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.full_metadata().items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"columns": self.columns, "rows": [[float(v) for v in r] for r in self.rows],
               "metadata": self.full_metadata()}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def render(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise InvalidArgument(f"unknown format {fmt!r}")


def _from_parts(columns, rows, meta) -> ResultTable:
    status = meta.pop("row_status", [])
    notes = meta.pop("row_notes", [""] * len(rows))
    t = ResultTable(columns, meta)
    for row, s, n in zip(rows, status, notes):
        t.add_row(row, s, n)
    return t


def read_csv(text: str) -> ResultTable:
    meta, lines = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, value = line[2:].split(": ", 1)
            meta[key] = json.loads(value)
        elif line.strip():
            lines.append(line)
    columns = lines[0].split(",")
    rows = [[float(v) for v in l.split(",")] for l in lines[1:]]
    return _from_parts(columns, rows, meta)


def read_json(text: str) -> ResultTable:
    doc = json.loads(text)
    return _from_parts(doc["columns"], doc["rows"], dict(doc["metadata"]))
