"""
swp-verify command line

Runs a JSON-configured batch of curvature dumps, closed-form comparisons,
soliton checks and theorem cases, then writes report.json / report.txt.

Exit codes: 0 all PASS, 2 at least one FLAG, 3 SKIPs without FLAGs,
4 configuration or evaluation error.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional, cast

import click
import pandas as pd

from src.cli.builder import build_run, load_config
from src.cli.catalog import catalog_rows
from src.cli.report import EXIT_ERROR, ReportFormat, build_report, to_text, write_reports
from src.cli.tasks import run_tasks
from src.config import DEFAULT_OUTPUT_DIR, configure_logging
from src.geometry.errors import ConfigError, VerifierError

logger = logging.getLogger(__name__)


def run(config_path: Path, out_dir: Path, grid: Optional[int] = None,
        tolerance: Optional[float] = None, fmt: ReportFormat = "both",
        echo: bool = True) -> int:
    """
    Load, build, run and report.

    Returns:
        Process exit code
    """
    config = load_config(config_path)
    setup = build_run(config, grid=grid, tolerance=tolerance)
    outcome = run_tasks(setup, config.task_list())
    report = build_report(setup.tolerance, setup.per_dim, setup.seed, outcome.dumps,
                          outcome.reports)
    try:
        write_reports(report, out_dir, fmt)
    except OSError as e:
        raise ConfigError("--out", f"cannot write reports to {out_dir}: {e}", e) from e
    if echo:
        click.echo(to_text(report), nl=False)
    logger.info("finished with exit code %d", report.exit_code)
    return report.exit_code


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              help="JSON run configuration")
@click.option("--grid", type=click.IntRange(min=2), default=None, help="Samples per coordinate")
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=None,
              help="Pointwise residual tolerance")
@click.option("--format", "fmt", type=click.Choice(["text", "json", "both"]), default="both",
              show_default=True)
@click.option("--catalog", "show_catalog", is_flag=True, help="List built-in instances and exit")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              default=DEFAULT_OUTPUT_DIR, show_default=True)
@click.option("--quiet", is_flag=True, help="Warnings and errors only; no report echo")
def main(config_path: Optional[Path], grid: Optional[int], tol: Optional[float], fmt: str,
         show_catalog: bool, out_dir: Path, quiet: bool) -> None:
    """Verify sequential warped product and Ricci-Bourguignon soliton identities."""
    configure_logging(quiet=quiet)
    if show_catalog:
        click.echo(pd.DataFrame(catalog_rows()).to_string(index=False))
        sys.exit(0)
    if config_path is None:
        click.echo("error: --config is required unless --catalog is given", err=True)
        sys.exit(EXIT_ERROR)

    try:
        code = run(config_path, out_dir, grid=grid, tolerance=tol,
                   fmt=cast(ReportFormat, fmt), echo=not quiet)
    except VerifierError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_ERROR)
    except Exception as e:
        logger.error("unexpected failure: %s", e, exc_info=True)
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_ERROR)
    sys.exit(code)


if __name__ == "__main__":
    main()
