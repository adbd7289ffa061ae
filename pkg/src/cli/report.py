"""
Report Writers

This module:
1. Applies the exit-code rule to a verdict multiset
2. Serializes the run as report.json (pydantic)
3. Renders report.txt as aligned pandas tables
"""

from __future__ import annotations

import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Literal

import pandas as pd

from src.cli.models import CurvatureDump, RunReport
from src.verification.models import Verdict, VerdictReport

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FLAG = 2
EXIT_SKIP = 3
EXIT_ERROR = 4

ReportFormat = Literal["text", "json", "both"]


def exit_code(verdicts: Iterable[Verdict]) -> int:
    """Any FLAG -> 2; else any SKIP -> 3; else 0"""
    seen = set(verdicts)
    if Verdict.FLAG in seen:
        return EXIT_FLAG
    if Verdict.SKIP in seen:
        return EXIT_SKIP
    return EXIT_PASS


def build_report(tolerance: float, per_dim: int, seed: int, dumps: list[CurvatureDump],
                 reports: list[VerdictReport]) -> RunReport:
    report = RunReport(
        generated_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        tolerance=tolerance,
        per_dim=per_dim,
        seed=seed,
        exit_code=EXIT_PASS,
        dumps=dumps,
        reports=reports,
    )
    return report.model_copy(update={"exit_code": exit_code(report.verdicts())})


def to_json(report: RunReport) -> str:
    return report.model_dump_json(indent=2)


# ===========================
# Text rendering
# ===========================


def _fmt(value: object) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:.3e}"
    if isinstance(value, dict):
        return "(" + ", ".join(f"{k}={v:.4g}" for k, v in value.items()) + ")"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return str(value)


def _table(rows: list[dict[str, object]]) -> str:
    if not rows:
        return "  (none)"
    frame = pd.DataFrame(rows).map(_fmt)
    return frame.to_string(index=False)


def _checks_table(report: VerdictReport) -> str:
    rows = []
    for check in report.checks:
        stats = check.stats
        rows.append({
            "clause": check.clause,
            "role": check.role.value,
            "check": check.name,
            "verdict": check.verdict.value,
            "max_abs": stats.max_abs if stats else None,
            "worst": stats.worst_component if stats else None,
            "at": stats.worst_point if stats else None,
            "constants": "; ".join(f"{c.name}={c.mean:.6g}+/-{c.spread:.1e}"
                                   for c in check.constants) or None,
            "note": check.note,
        })
    return _table(rows)


def _ledger_table(report: VerdictReport) -> str:
    return _table([
        {
            "identity": entry.identity,
            "component": entry.worst_component,
            "at": entry.worst_point,
            "oracle": entry.oracle_value,
            "closed_form": entry.closed_form_value,
            "ratio": entry.ratio,
            "abs_diff": entry.abs_diff,
        }
        for entry in report.ledger
    ])


def _dump_section(dump: CurvatureDump) -> list[str]:
    rows = [
        {"point": point.point, "scalar": point.scalar, "condition": point.condition}
        for point in dump.points
    ]
    bianchi = dump.bianchi
    return [
        f"curvature dump: {dump.instance}",
        _table(rows),
        f"first Bianchi on {len(dump.bianchi_points)} points: {bianchi.verdict.value} "
        f"(max {_fmt(bianchi.stats.max_abs if bianchi.stats else None)})",
        "",
    ]


def to_text(report: RunReport) -> str:
    lines = [
        f"generated {report.generated_at}  tol={report.tolerance:g}  grid={report.per_dim}  "
        f"seed={report.seed}",
        "",
    ]
    for dump in report.dumps:
        lines.extend(_dump_section(dump))
    for verdicts in report.reports:
        counts = ", ".join(f"{k}={v}" for k, v in verdicts.counts().items())
        lines.extend([
            f"{verdicts.case_id} on {verdicts.instance} ({verdicts.kind}, "
            f"{verdicts.grid_points} points): {counts}",
            _checks_table(verdicts),
        ])
        if verdicts.ledger:
            lines.extend(["fidelity ledger:", _ledger_table(verdicts)])
        lines.append("")
    lines.append(f"exit code {report.exit_code}")
    return "\n".join(lines) + "\n"


def write_reports(report: RunReport, out_dir: Path, fmt: ReportFormat = "both") -> list[Path]:
    """
    Write report.json and/or report.txt.

    Args:
        report: Finished run report
        out_dir: Output directory, created if missing
        fmt: Which files to write

    Returns:
        Paths written
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = out_dir / "report.json"
        path.write_text(to_json(report), encoding="utf-8")
        written.append(path)
    if fmt in ("text", "both"):
        path = out_dir / "report.txt"
        path.write_text(to_text(report), encoding="utf-8")
        written.append(path)
    logger.info("wrote %s", ", ".join(str(p) for p in written))
    return written
