"""
Pydantic models for run configuration and run reports
"""

from __future__ import annotations

from typing import Annotated, Any, Callable, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Discriminator, Field, Tag, model_validator

from src.verification.models import CheckResult, Verdict, VerdictReport

TaskName = Literal["curvature-dump", "compare-closedform", "soliton-check", "verify-theorem"]
IdentityName = Literal["connection", "ricci", "lie"]


class StrictModel(BaseModel):
    """Rejects unknown keys everywhere in the configuration tree"""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


# ===========================
# Run configuration
# ===========================


class FactorConfig(StrictModel):
    dim: int = Field(..., ge=1, description="Factor dimension")
    coords: list[str] = Field(..., min_length=1, description="Coordinate names")
    metric: list[list[str]] = Field(..., description="dim x dim matrix of expression strings")
    box: list[tuple[float, float]] = Field(..., description="[low, high] per coordinate")

    @model_validator(mode="after")
    def check_shapes(self) -> FactorConfig:
        if len(self.coords) != self.dim:
            raise ValueError(f"coords must list {self.dim} names")
        if len(self.metric) != self.dim or any(len(row) != self.dim for row in self.metric):
            raise ValueError(f"metric must be {self.dim}x{self.dim}")
        if len(self.box) != self.dim:
            raise ValueError(f"box must give {self.dim} intervals")
        return self


class InlineInstance(StrictModel):
    kind: Literal["generic", "standard-static", "grw"]
    factors: list[FactorConfig] = Field(..., min_length=3, max_length=3)
    f: str = Field("1", description="Warping function over factor-1 coordinates")
    h: str = Field("1", description="Warping function over factor-1 and factor-2 coordinates")
    name: str = "inline"


class CatalogInstance(StrictModel):
    catalog: str = Field(..., description="Built-in instance name")


class VectorFieldConfig(StrictModel):
    vector: list[list[str]] = Field(..., description="Component blocks, one list per factor")


class ScalarFieldConfig(StrictModel):
    scalar: str


FieldValue = Union[float, str, list[list[str]]]


class SolitonConfig(StrictModel):
    """
    Soliton data. X is 0, a named vector field or inline component blocks;
    u is a named scalar field or an expression.
    """

    X: Optional[FieldValue] = None
    u: Optional[str] = None
    lam: float = Field(..., alias="lambda")
    rho: float = 0.0

    @model_validator(mode="after")
    def exactly_one_potential(self) -> SolitonConfig:
        if (self.X is None) == (self.u is None):
            raise ValueError("soliton needs exactly one of X or u")
        if isinstance(self.X, float) and self.X != 0.0:
            raise ValueError("a numeric X must be 0")
        return self


class TaskConfig(StrictModel):
    task: TaskName
    id: Optional[str] = Field(None, description="Theorem case id for verify-theorem")
    identities: Optional[list[IdentityName]] = None
    field: Optional[str] = Field(None, description="Named vector field for Lie comparisons")
    lie_path: Literal["oracle", "closedform"] = "oracle"

    @model_validator(mode="after")
    def theorem_needs_id(self) -> TaskConfig:
        if self.task == "verify-theorem" and not self.id:
            raise ValueError("verify-theorem needs an id")
        return self


def _by_key(key: str, present: str, absent: str) -> Callable[[Any], str]:
    """Union discriminator choosing a tag by the presence of one key"""

    def choose(value: Any) -> str:
        if isinstance(value, dict):
            return present if key in value else absent
        if isinstance(value, str):
            return absent
        return present if hasattr(value, key) else absent

    return choose


# Tags never appear in JSON paths shown to users
UNION_TAGS = frozenset({"catalog", "inline", "vector", "scalar", "task-name", "task-object"})

InstanceConfig = Annotated[
    Union[Annotated[CatalogInstance, Tag("catalog")], Annotated[InlineInstance, Tag("inline")]],
    Discriminator(_by_key("catalog", "catalog", "inline")),
]
FieldConfig = Annotated[
    Union[Annotated[VectorFieldConfig, Tag("vector")], Annotated[ScalarFieldConfig, Tag("scalar")]],
    Discriminator(_by_key("vector", "vector", "scalar")),
]
TaskEntry = Annotated[
    Union[Annotated[TaskName, Tag("task-name")], Annotated[TaskConfig, Tag("task-object")]],
    Discriminator(_by_key("task", "task-object", "task-name")),
]


class RunConfig(StrictModel):
    instance: InstanceConfig
    fields: dict[str, FieldConfig] = Field(default_factory=dict)
    soliton: Optional[SolitonConfig] = None
    tasks: list[TaskEntry] = Field(..., min_length=1)
    grid: Optional[int] = Field(None, ge=2, description="Samples per coordinate")
    tol: Optional[float] = Field(None, gt=0.0)
    seed: Optional[int] = None

    def task_list(self) -> list[TaskConfig]:
        return [TaskConfig(task=t) if isinstance(t, str) else t for t in self.tasks]


# ===========================
# Run report
# ===========================


class CurvaturePoint(BaseModel):
    point: dict[str, float]
    scalar: float
    ricci: list[list[float]]
    condition: Optional[float] = Field(None, description="Reported only above the warning level")


class CurvatureDump(BaseModel):
    instance: str
    points: list[CurvaturePoint]
    bianchi_points: list[dict[str, float]]
    bianchi: CheckResult


class RunReport(BaseModel):
    generated_at: str = Field(..., description="UTC timestamp; excluded from determinism checks")
    tolerance: float
    per_dim: int
    seed: int
    exit_code: int
    dumps: list[CurvatureDump] = Field(default_factory=list)
    reports: list[VerdictReport] = Field(default_factory=list)

    def verdicts(self) -> list[Verdict]:
        found = [dump.bianchi.verdict for dump in self.dumps]
        for report in self.reports:
            found.extend(report.verdicts())
        return found
