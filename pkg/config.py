"""
Configuration settings for axial-entropy
"""

import math
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(f"AXIAL_{name}", str(default)))


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(f"AXIAL_{name}", repr(default)))


# Application settings
APP_NAME = "axial-entropy"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = "Pattern counts and topological entropy of axial products of one-dimensional SFTs"

# File paths
BASE_DIR = Path(__file__).parent

# Spectral settings
SPECTRAL_TOLERANCE = _env_float("SPECTRAL_TOLERANCE", 1e-12)
SPECTRAL_MAX_ITERATIONS = _env_int("SPECTRAL_MAX_ITERATIONS", 100_000)

# Word counts switch to log-domain doubles beyond this length
EXACT_WORD_LENGTH_LIMIT = _env_int("EXACT_WORD_LENGTH_LIMIT", 256)

# Grid counting settings
GRID_EXACT_MAX_CELLS = _env_int("GRID_EXACT_MAX_CELLS", 64)
GRID_MAX_PROFILE_STATES = _env_int("GRID_MAX_PROFILE_STATES", 250_000)
TRANSFER_MAX_WIDTH = _env_int("TRANSFER_MAX_WIDTH", 10)
TRANSFER_MAX_COLUMNS = _env_int("TRANSFER_MAX_COLUMNS", 4096)
GRID_DEFAULT_MAX_BOX = 8
DENSE_MAX_MATRIX_SIZE = _env_int("DENSE_MAX_MATRIX_SIZE", 4096)

# Tree counting settings
TREE_EXACT_MAX_BITS = _env_int("TREE_EXACT_MAX_BITS", 1_000_000)
PERMUTATION_PROBE_DEPTH = 6
TREE_SURFACE_EXACT_DEPTH = 6

# Series settings
SERIES_TAIL_TOLERANCE = _env_float("SERIES_TAIL_TOLERANCE", 1e-9)
RESIDUAL_TAIL_TOLERANCE = _env_float("RESIDUAL_TAIL_TOLERANCE", 1e-12)
MAX_SERIES_TERMS = _env_int("MAX_SERIES_TERMS", 10_000)

# Multiplicative systems
MIS_EXACT_MAX_LENGTH = _env_int("MIS_EXACT_MAX_LENGTH", 4096)

# Oracle budget
ORACLE_MAX_ASSIGNMENTS = _env_int("ORACLE_MAX_ASSIGNMENTS", 10_000_000)
ORACLE_MAX_CELLS = _env_int("ORACLE_MAX_CELLS", 24)

# Report settings
OUTPUT_FORMATS = ["csv", "json", "human"]
DEFAULT_OUTPUT_FORMAT = os.getenv("AXIAL_OUTPUT_FORMAT", "human")
FLOAT_FORMAT = "%.17g"
LOG_BASES = {
    "e": 1.0,
    "2": math.log(2.0),
}
DEFAULT_LOG_BASE = os.getenv("AXIAL_LOG_BASE", "e")

# CLI exit codes
EXIT_CODES = {
    'ok': 0,
    'computation_error': 1,
    'config_error': 2,
}

# Sweep settings
SWEEP_SETTINGS = {
    'max_jobs': 8,
    'grid_verify_k': (1, 2),
    'tree_verify_depths': (1, 2, 3),
}
