"""Verdict tables shared by the Bell-state analyzers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

from ..errors import InvalidArgument
from .modes import BellLabel

__all__ = ["INCONCLUSIVE", "VERDICTS", "BsaReport"]

INCONCLUSIVE = "inconclusive"
VERDICTS = tuple(b.value for b in BellLabel) + (INCONCLUSIVE,)

ROW_TOL = 1e-9


@dataclass
class BsaReport:
    """Verdict probabilities per incident Bell state, averaged with weight 1/4."""

    rows: Dict[BellLabel, Dict[str, float]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def add_row(self, bell: BellLabel, verdicts: Dict[str, float]) -> None:
        row = {v: float(verdicts.get(v, 0.0)) for v in VERDICTS}
        unknown = set(verdicts) - set(VERDICTS)
        if unknown:
            raise InvalidArgument(f"unknown verdicts {sorted(unknown)}")
        if any(p < -ROW_TOL for p in row.values()):
            raise InvalidArgument(f"negative verdict probability in {row}")
        self.rows[bell] = row

    def row_defect(self, bell: BellLabel) -> float:
        return abs(sum(self.rows[bell].values()) - 1.0)

    def success(self, bell: BellLabel) -> float:
        return self.rows[bell][bell.value]

    def error(self, bell: BellLabel) -> float:
        row = self.rows[bell]
        return sum(p for v, p in row.items() if v not in (bell.value, INCONCLUSIVE))

    def _mean(self, fn) -> float:
        if not self.rows:
            raise InvalidArgument("empty report")
        return sum(fn(b) for b in self.rows) / len(self.rows)

    @property
    def p_success(self) -> float:
        return self._mean(self.success)

    @property
    def p_error(self) -> float:
        return self._mean(self.error)

    @property
    def p_inconclusive(self) -> float:
        return self._mean(lambda b: self.rows[b][INCONCLUSIVE])

    def merge(self, other: "BsaReport") -> "BsaReport":
        out = BsaReport(dict(self.rows), {**self.metadata, **other.metadata})
        out.rows.update(other.rows)
        return out
