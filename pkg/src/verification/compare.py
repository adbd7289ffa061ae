"""
Closed-Form versus Oracle Comparison

This module:
1. Evaluates every printed connection, Ricci and Lie block formula and the
   matching oracle components at every grid point
2. Emits PASS/FLAG rows with residual statistics
3. Collects FLAG rows into the fidelity ledger with oracle/closed-form ratios
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from src.geometry import closedform, oracle
from src.geometry.errors import MissingAuxiliaryDataError
from src.geometry.manifold import Point, SequentialWarpedProduct, VectorFieldSpec, WarpKind
from src.geometry.stats import ResidualStats
from src.verification.models import (
    CheckResult,
    CheckRole,
    DerivedConstant,
    LedgerEntry,
    Verdict,
    VerdictReport,
)

logger = logging.getLogger(__name__)

IDENTITY_FAMILIES = ("connection", "ricci", "lie")

# ===========================
# Printed formulas
# ===========================

_MIXED_RICCI = "Ric(Xi, Xj) = 0 for i != j"
_MIXED_LIE = "(L_X g)(Xi, Xj) = 0 for i != j"

_GENERIC_ANCHORS: dict[tuple[str, tuple[int, int]], str] = {
    ("connection", (1, 1)): "nabla_X1 Y1 = nabla1_X1 Y1",
    ("connection", (1, 2)): "nabla_X1 X2 = nabla_X2 X1 = X1(ln f) X2",
    ("connection", (2, 2)): "nabla_X2 Y2 = nabla2_X2 Y2 - f g2(X2, Y2) grad1 f",
    ("connection", (1, 3)): "nabla_X3 X1 = nabla_X1 X3 = X1(ln h) X3",
    ("connection", (2, 3)): "nabla_X2 X3 = nabla_X3 X2 = X2(ln h) X3",
    ("connection", (3, 3)): "nabla_X3 Y3 = nabla3_X3 Y3 - h g3(X3, Y3) grad h",
    ("ricci", (1, 1)): "Ric(X1, Y1) = Ric1 - (n2/f) Hess1 f - (n3/h) HessBar h",
    ("ricci", (2, 2)): "Ric(X2, Y2) = Ric2 - f# g2 - (n3/h) HessBar h",
    ("ricci", (3, 3)): "Ric(X3, Y3) = Ric3 - h# g3",
    ("lie", (1, 1)): "(L_X g)(Y1, Z1) = (L1_X1 g1)(Y1, Z1)",
    ("lie", (2, 2)): "(L_X g)(Y2, Z2) = f^2 (L2_X2 g2)(Y2, Z2) + 2 f X1(f) g2(Y2, Z2)",
    ("lie", (3, 3)): "(L_X g)(Y3, Z3) = h^2 (L3_X3 g3)(Y3, Z3) + 2 h (X1 + X2)(h) g3(Y3, Z3)",
}

_STATIC_ANCHORS = {
    ("connection", (1, 3)): "nabla_X1 dt = nabla_dt X1 = X1(ln h) dt",
    ("connection", (2, 3)): "nabla_X2 dt = nabla_dt X2 = X2(ln h) dt",
    ("connection", (3, 3)): "nabla_dt dt = h grad h",
    ("ricci", (1, 1)): "Ric(X1, Y1) = Ric1 - (n2/f) Hess1 f - (1/h) HessBar h",
    ("ricci", (2, 2)): "Ric(X2, Y2) = Ric2 - f# g2 - (1/h) HessBar h",
    ("ricci", (3, 3)): "Ric(dt, dt) = h Lap h",
    ("lie", (3, 3)): "(L_X g)(u dt, v dt) = -2 h^2 uv dw/dt - 2 uv h (X1 + X2)(h)",
}

_GRW_ANCHORS = {
    ("connection", (1, 1)): "nabla_dt dt = 0",
    ("connection", (1, 2)): "nabla_dt X2 = nabla_X2 dt = (f'/f) X2",
    ("connection", (1, 3)): "nabla_dt X3 = nabla_X3 dt = (f'/f) X3",
    ("connection", (2, 2)): "nabla_X2 Y2 = nabla2_X2 Y2 - f f' g2(X2, Y2) dt",
    ("connection", (3, 3)): "nabla_X3 Y3 = nabla3_X3 Y3 - h g3(X3, Y3) grad h",
    ("ricci", (1, 1)): "Ric(dt, dt) = (n2/f) f'' + (n3/h) d2h/dt2",
    ("ricci", (2, 2)): "Ric(X2, Y2) = Ric2 - f<> g2 - (n3/h) HessBar h",
    ("lie", (1, 1)): "(L_X g)(dt, dt) = -2 dw/dt",
    ("lie", (2, 2)): "(L_X g)(Y2, Z2) = f^2 (L2_X2 g2)(Y2, Z2) + 2 w f f' g2(Y2, Z2)",
    ("lie", (3, 3)): "(L_X g)(Y3, Z3) = h^2 (L3_X3 g3)(Y3, Z3) + 2 w h (dh/dt + X2(h)) g3(Y3, Z3)",
}


def anchor_for(kind: WarpKind, family: str, pair: tuple[int, int]) -> str:
    if family == "ricci" and pair[0] != pair[1]:
        return _MIXED_RICCI
    if family == "lie" and pair[0] != pair[1]:
        return _MIXED_LIE
    by_kind = {WarpKind.STANDARD_STATIC: _STATIC_ANCHORS, WarpKind.GRW: _GRW_ANCHORS}
    overrides = by_kind.get(kind, {})
    return overrides.get((family, pair), _GENERIC_ANCHORS[(family, pair)])


# ===========================
# Identity checks
# ===========================


def identity_check(name: str, anchor: str, operation: str, oracle_values: np.ndarray,
                   closed_values: np.ndarray, grid: Sequence[Point], row_labels: Sequence[str],
                   col_labels: Sequence[str], tolerance: float,
                   role: CheckRole = CheckRole.IDENTITY, clause: Optional[str] = None,
                   constants: Sequence[DerivedConstant] = (), require: bool = True,
                   note: Optional[str] = None) -> tuple[CheckResult, Optional[LedgerEntry]]:
    """
    Compare two (points, rows, cols) tensors componentwise.

    PASS iff max |oracle - closed form| < tolerance and `require` holds. A
    FLAG produces a ledger entry for the worst component.
    """
    oracle_values = np.asarray(oracle_values, dtype=float).reshape(
        len(grid), len(row_labels), len(col_labels))
    closed_values = np.asarray(closed_values, dtype=float).reshape(oracle_values.shape)
    residual = oracle_values - closed_values
    stats = ResidualStats.from_samples(grid, residual, row_labels, col_labels)
    passed = stats.max_abs < tolerance and require
    result = CheckResult(
        name=name,
        anchor=anchor,
        operation=operation,
        tolerance=tolerance,
        role=role,
        clause=clause,
        verdict=Verdict.PASS if passed else Verdict.FLAG,
        stats=stats,
        constants=list(constants),
        note=note,
    )
    if passed or residual.size == 0:
        return result, None
    p, i, j = np.unravel_index(int(np.argmax(np.abs(residual))), residual.shape)
    oracle_value = float(oracle_values[p, i, j])
    closed_value = float(closed_values[p, i, j])
    entry = LedgerEntry(
        identity=name,
        worst_component=[row_labels[int(i)], col_labels[int(j)]],
        worst_point=grid[int(p)].as_dict(),
        oracle_value=oracle_value,
        closed_form_value=closed_value,
        ratio=LedgerEntry.ratio_of(oracle_value, closed_value),
        abs_diff=abs(oracle_value - closed_value),
    )
    return result, entry


def sort_ledger(entries: Sequence[LedgerEntry]) -> list[LedgerEntry]:
    return sorted(entries, key=lambda entry: -entry.abs_diff)


def _connection_samples(manifold: SequentialWarpedProduct, pair: tuple[int, int],
                        grid: Sequence[Point]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    first, second = (manifold.factors[b - 1].coords for b in pair)
    basis = [(a, b) for a in first for b in second]
    index = {c: k for k, c in enumerate(manifold.coords)}
    oracle_rows, closed_rows = [], []
    for point in grid:
        gamma = oracle.christoffel(manifold, point).gamma
        oracle_rows.append([gamma[:, index[a], index[b]] for a, b in basis])
        closed_rows.append([
            closedform.connection_closed(manifold, pair, (a, b), point).components
            for a, b in basis
        ])
    labels = [f"nabla_{a} d_{b}" for a, b in basis]
    return np.array(oracle_rows), np.array(closed_rows), labels


def compare_closedform(manifold: SequentialWarpedProduct, grid: Sequence[Point], tolerance: float,
                       identities: Sequence[str] = IDENTITY_FAMILIES,
                       field: Optional[VectorFieldSpec] = None) -> VerdictReport:
    """
    Evaluate each printed identity both ways at every grid point.

    Rows are ordered by family (connection, ricci, lie) then block pair.
    """
    unknown = set(identities) - set(IDENTITY_FAMILIES)
    if unknown:
        raise ValueError(f"unknown identity families {sorted(unknown)}")
    if "lie" in identities and field is None:
        raise MissingAuxiliaryDataError("Lie-derivative comparisons need a vector field X")

    checks: list[CheckResult] = []
    ledger: list[LedgerEntry] = []
    slices = manifold.block_slices

    def record(outcome: tuple[CheckResult, Optional[LedgerEntry]]) -> None:
        checks.append(outcome[0])
        if outcome[1] is not None:
            ledger.append(outcome[1])

    for family in IDENTITY_FAMILIES:
        if family not in identities:
            continue
        for pair in closedform.BLOCK_PAIRS:
            name = f"{family}{pair}".replace(" ", "")
            anchor = anchor_for(manifold.kind, family, pair)
            si, sj = slices[pair[0] - 1], slices[pair[1] - 1]
            rows = list(manifold.factors[pair[0] - 1].coords)
            cols = list(manifold.factors[pair[1] - 1].coords)
            if family == "connection":
                oracle_values, closed_values, labels = _connection_samples(manifold, pair, grid)
                record(identity_check(name, anchor, "oracle.christoffel", oracle_values,
                                      closed_values, grid, labels, list(manifold.coords),
                                      tolerance))
            elif family == "ricci":
                oracle_values = np.array([oracle.ricci(manifold, p).components[si, sj]
                                          for p in grid])
                closed_values = np.array([closedform.ricci_closed(manifold, pair, p) for p in grid])
                record(identity_check(name, anchor, "oracle.ricci", oracle_values, closed_values,
                                      grid, rows, cols, tolerance))
            else:
                assert field is not None
                oracle_values = np.array([
                    oracle.lie_derivative(manifold, field, p).components[si, sj] for p in grid
                ])
                closed_values = np.array([
                    closedform.lie_closed(manifold, field, pair, p) for p in grid
                ])
                record(identity_check(name, anchor, "oracle.lie_derivative", oracle_values,
                                      closed_values, grid, rows, cols, tolerance))

    report = VerdictReport(
        case_id="closedform",
        instance=manifold.name,
        kind=manifold.kind.value,
        tolerance=tolerance,
        grid_points=len(grid),
        checks=checks,
        ledger=sort_ledger(ledger),
    )
    logger.info("closed-form comparison on %s: %s", manifold.name, report.counts())
    return report
