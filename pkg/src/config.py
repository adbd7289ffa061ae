"""
Runtime configuration for the sequential warped product verifier

Defaults are read once from the environment (an optional .env file is loaded
first). A JSON run configuration and CLI flags override them per run.
"""

import logging
import os
import sys

from dotenv import load_dotenv

load_dotenv()

# ===========================
# Verification defaults
# ===========================

DEFAULT_TOLERANCE = float(os.getenv("SWP_TOLERANCE", "1e-6"))
DEFAULT_GRID_PER_DIM = int(os.getenv("SWP_GRID_PER_DIM", "5"))
DEFAULT_SEED = int(os.getenv("SWP_SEED", "0"))
DEFAULT_OUTPUT_DIR = os.getenv("SWP_OUTPUT_DIR", "reports")
BIANCHI_SPOT_POINTS = int(os.getenv("SWP_BIANCHI_POINTS", "10"))

# ===========================
# Numerical guards
# ===========================

DEGENERACY_THRESHOLD = 1e-12
CONDITION_WARNING = 1e8
GRID_INSET_FRACTION = 0.05
FD_STEP = 1e-4

# ===========================
# Logging
# ===========================

LOG_LEVEL = os.getenv("SWP_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str = LOG_LEVEL, quiet: bool = False) -> None:
    """
    Install a single stream handler on the package logger.

    Args:
        level: Logging level name used when not quiet
        quiet: Only warnings and errors are shown
    """
    logger = logging.getLogger("src")
    logger.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(logging.WARNING if quiet else level.upper())
    logger.propagate = False
