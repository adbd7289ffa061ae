"""
Pydantic models for verdict reports and the fidelity ledger
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.geometry.stats import ResidualStats


class Verdict(str, Enum):
    PASS = "PASS"
    FLAG = "FLAG"
    SKIP = "SKIP"


class CheckRole(str, Enum):
    HYPOTHESIS = "hypothesis"
    CONCLUSION = "conclusion"
    IDENTITY = "identity"


class DerivedConstant(BaseModel):
    """A fitted or stated proportionality constant summarized over the grid"""

    name: str = Field(..., description="e.g. 'mu2 (fitted)' or 'mu2 (stated)'")
    mean: float
    spread: float = Field(..., ge=0.0, description="max - min over the grid")
    minimum: float
    maximum: float

    @classmethod
    def from_samples(cls, name: str, samples: Sequence[float]) -> DerivedConstant:
        values = np.asarray(samples, dtype=float)
        return cls(
            name=name,
            mean=float(values.mean()),
            spread=float(values.max() - values.min()),
            minimum=float(values.min()),
            maximum=float(values.max()),
        )


class LedgerEntry(BaseModel):
    """Worst disagreement between an oracle value and a closed-form value"""

    identity: str
    worst_component: list[str]
    worst_point: dict[str, float]
    oracle_value: float
    closed_form_value: float
    ratio: Optional[float] = Field(None, description="oracle / closed form; null when undefined")
    abs_diff: float

    @staticmethod
    def ratio_of(oracle_value: float, closed_form_value: float) -> Optional[float]:
        if closed_form_value == 0.0:
            return None
        ratio = oracle_value / closed_form_value
        return ratio if math.isfinite(ratio) else None


class CheckResult(BaseModel):
    name: str
    anchor: str = Field(..., description="Printed statement the check encodes")
    operation: str = Field(..., description="Soliton/oracle operation invoked")
    tolerance: float
    role: CheckRole
    clause: Optional[str] = None
    verdict: Verdict
    stats: Optional[ResidualStats] = None
    constants: list[DerivedConstant] = Field(default_factory=list)
    note: Optional[str] = None


class VerdictReport(BaseModel):
    case_id: str
    instance: str
    kind: str
    tolerance: float
    grid_points: int
    checks: list[CheckResult]
    ledger: list[LedgerEntry] = Field(default_factory=list)

    def verdicts(self) -> list[Verdict]:
        return [check.verdict for check in self.checks]

    def counts(self) -> dict[str, int]:
        return {verdict.value: self.verdicts().count(verdict) for verdict in Verdict}
