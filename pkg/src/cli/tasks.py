"""
Task Runner

This module:
1. Dispatches each configured task against a built run
2. Produces curvature dumps with a first-Bianchi spot check
3. Wraps soliton residuals, closed-form comparisons and theorem cases as VerdictReports
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.cli.builder import RunSetup
from src.cli.models import CurvatureDump, CurvaturePoint, TaskConfig
from src.config import BIANCHI_SPOT_POINTS
from src.geometry import oracle
from src.geometry.errors import ConfigError, MissingAuxiliaryDataError
from src.geometry.manifold import Point, VectorFieldSpec
from src.geometry.soliton import LiePath, gradient_rbs_residual, rbs_residual
from src.geometry.stats import ResidualStats
from src.verification.compare import IDENTITY_FAMILIES, compare_closedform
from src.verification.models import CheckResult, CheckRole, Verdict, VerdictReport
from src.verification.theorems import verify_theorem

logger = logging.getLogger(__name__)

RBS_ANCHOR = "Ric + 1/2 L_X g = lambda g + rho R g"
GRADIENT_ANCHOR = "Ric + Hess u = lambda g + rho R g"
BIANCHI_ANCHOR = "R^l_ijk + R^l_jki + R^l_kij = 0"


@dataclass
class TaskOutcome:
    """Everything produced by the configured tasks, in task order"""

    dumps: list[CurvatureDump] = field(default_factory=list)
    reports: list[VerdictReport] = field(default_factory=list)


# ===========================
# Curvature dump
# ===========================


def bianchi_points(grid: Sequence[Point], seed: int,
                   count: int = BIANCHI_SPOT_POINTS) -> list[Point]:
    """Seeded sample of distinct grid points, kept in grid order"""
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(grid), size=min(count, len(grid)), replace=False)
    return [grid[int(i)] for i in sorted(chosen)]


def curvature_dump(setup: RunSetup) -> CurvatureDump:
    manifold = setup.manifold
    points = []
    for point in setup.grid:
        sample = oracle.curvature_at(manifold, point)
        points.append(CurvaturePoint(
            point=point.as_dict(),
            scalar=sample.scalar,
            ricci=sample.ricci.tolist(),
            condition=sample.christoffel.condition,
        ))

    spots = bianchi_points(setup.grid, setup.seed)
    residuals = np.array([oracle.first_bianchi_residual(manifold, p) for p in spots])
    stats = ResidualStats.from_samples(spots, residuals.reshape(-1, 1, 1), ["cyclic"])
    bianchi = CheckResult(
        name="first Bianchi",
        anchor=BIANCHI_ANCHOR,
        operation="oracle.first_bianchi_residual",
        tolerance=setup.tolerance,
        role=CheckRole.IDENTITY,
        verdict=Verdict.PASS if stats.max_abs < setup.tolerance else Verdict.FLAG,
        stats=stats,
        note=f"{len(spots)} points drawn with seed {setup.seed}",
    )
    logger.info("curvature dump on %s: %d points, Bianchi %s", manifold.name, len(points),
                bianchi.verdict.value)
    return CurvatureDump(instance=manifold.name, points=points,
                         bianchi_points=[p.as_dict() for p in spots], bianchi=bianchi)


# ===========================
# Verdict tasks
# ===========================


def _named_field(setup: RunSetup, name: Optional[str]) -> Optional[VectorFieldSpec]:
    if name is not None:
        if name not in setup.vector_fields:
            raise ConfigError("tasks.field", f"unknown vector field '{name}'; "
                                             f"known: {sorted(setup.vector_fields)}")
        return setup.vector_fields[name]
    if setup.soliton is not None and setup.soliton.field is not None:
        return setup.soliton.field
    return None


def closedform_task(setup: RunSetup, task: TaskConfig) -> VerdictReport:
    vector = _named_field(setup, task.field)
    if task.identities is not None:
        identities: Sequence[str] = task.identities
    else:
        identities = [f for f in IDENTITY_FAMILIES if f != "lie" or vector is not None]
    return compare_closedform(setup.manifold, setup.grid, setup.tolerance, identities, vector)


def soliton_task(setup: RunSetup, task: TaskConfig) -> VerdictReport:
    instance = setup.soliton
    if instance is None:
        raise MissingAuxiliaryDataError("soliton-check needs a 'soliton' section")
    manifold = instance.manifold
    if instance.is_gradient:
        stats = gradient_rbs_residual(instance, setup.grid)
        anchor, operation = GRADIENT_ANCHOR, "soliton.gradient_rbs_residual"
    else:
        path = LiePath(task.lie_path)
        stats = rbs_residual(instance, setup.grid, path)
        anchor, operation = RBS_ANCHOR, f"soliton.rbs_residual[{path.value}]"

    check = CheckResult(
        name=instance.label,
        anchor=anchor,
        operation=operation,
        tolerance=setup.tolerance,
        role=CheckRole.CONCLUSION,
        verdict=Verdict.PASS if stats.max_abs < setup.tolerance else Verdict.FLAG,
        stats=stats,
        note=f"lambda={instance.lam!r}, rho={instance.rho!r}",
    )
    return VerdictReport(
        case_id="soliton-check",
        instance=manifold.name,
        kind=manifold.kind.value,
        tolerance=setup.tolerance,
        grid_points=len(setup.grid),
        checks=[check],
    )


def theorem_task(setup: RunSetup, task: TaskConfig) -> VerdictReport:
    if setup.soliton is None:
        raise MissingAuxiliaryDataError(f"{task.id} needs a 'soliton' section")
    assert task.id is not None
    try:
        return verify_theorem(task.id, setup.soliton, setup.grid, setup.tolerance)
    except KeyError as e:
        raise ConfigError("tasks.id", str(e.args[0])) from e


def run_tasks(setup: RunSetup, tasks: Sequence[TaskConfig]) -> TaskOutcome:
    """
    Run tasks in configuration order.

    Args:
        setup: Built run
        tasks: Normalized task list

    Returns:
        TaskOutcome with curvature dumps and verdict reports
    """
    outcome = TaskOutcome()
    for task in tasks:
        logger.info("task %s%s", task.task, f" {task.id}" if task.id else "")
        if task.task == "curvature-dump":
            outcome.dumps.append(curvature_dump(setup))
        elif task.task == "compare-closedform":
            outcome.reports.append(closedform_task(setup, task))
        elif task.task == "soliton-check":
            outcome.reports.append(soliton_task(setup, task))
        else:
            outcome.reports.append(theorem_task(setup, task))
    return outcome
