# Residual bookkeeping shared by every verification routine.
# A tracker collects one residual per sample point; the summary becomes a
# CheckResult that campaigns put into reports.

from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, PrivateAttr


class CheckResult(BaseModel):
    name: str
    tolerance: float
    max_residual: float
    mean_residual: float
    worst_point: Optional[List[float]] = None
    samples: int = 0
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)
    _rows: List[Dict[str, Any]] = PrivateAttr(default_factory=list)

    def per_point(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows)

    def renamed(self, name: str) -> "CheckResult":
        out = self.model_copy(update={"name": name})
        out._rows = [{**row, "check": name} for row in self._rows]
        return out


class ResidualTracker:

    def __init__(self, name: str, tolerance: float):
        self.name = name
        self.tolerance = tolerance
        self.log: List[Dict[str, Any]] = []
        self.detail: Dict[str, Any] = {}

    def record(self, residual: float, point: Optional[Sequence[float]] = None, **labels):
        self.log.append({
            "residual": float(residual),
            "point": None if point is None else [float(v) for v in point],
            **labels,
        })

    @property
    def max_residual(self) -> float:
        return max((entry["residual"] for entry in self.log), default=0.0)

    def summary(self) -> CheckResult:
        residuals = np.array([entry["residual"] for entry in self.log]) if self.log else np.zeros(1)
        worst = self.log[int(np.argmax(residuals))]["point"] if self.log else None
        # NaN residuals fail the check
        max_residual = float(np.max(residuals)) if not np.any(np.isnan(residuals)) else float("nan")
        result = CheckResult(
            name=self.name,
            tolerance=self.tolerance,
            max_residual=max_residual,
            mean_residual=float(np.mean(residuals)),
            worst_point=worst,
            samples=len(self.log),
            passed=bool(max_residual <= self.tolerance),
            detail=dict(self.detail),
        )
        result._rows = self.rows()
        return result

    def rows(self) -> List[Dict[str, Any]]:
        rows = []
        for entry in self.log:
            row = {"check": self.name, "residual": entry["residual"]}
            for i, coord in enumerate(entry["point"] or []):
                row[f"x{i + 1}"] = coord
            row.update({k: v for k, v in entry.items() if k not in ("residual", "point")})
            rows.append(row)
        return rows

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows())


class VerificationReport(BaseModel):
    checks: List[CheckResult] = Field(default_factory=list)

    @classmethod
    def from_trackers(cls, trackers: Sequence[ResidualTracker]) -> "VerificationReport":
        return cls(checks=[t.summary() for t in trackers])

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckResult:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def residual(self, name: str) -> float:
        return self.check(name).max_residual

    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def prefixed(self, prefix: str) -> List[CheckResult]:
        return [check.renamed(f"{prefix}{check.name}") for check in self.checks]

    def per_point(self) -> pd.DataFrame:
        frames = [check.per_point() for check in self.checks if check.samples]
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def relative_residual(difference, *references) -> float:
    """Max-abs residual scaled by ``max(1, largest reference coefficient)``."""
    scale = 1.0
    for ref in references:
        scale = max(scale, ref.norm() if hasattr(ref, "norm") else float(np.max(np.abs(ref))))
    diff = difference.norm() if hasattr(difference, "norm") else float(np.max(np.abs(difference)))
    return diff / scale
