"""Constants for Threshold Market.

This module defines the reference parameter set, file names and CSV layouts
shared by the simulator, the analysis pipeline and the CLI.
"""

from typing import Dict, Tuple

SPIN_VALUES: Tuple[int, int, int] = (-1, 0, 1)

NEIGHBOR_COUNT = 4

LEVEL_CAP = 64

DEFAULT_LINEAR_SIZE = 32
DEFAULT_COUPLING = 1.0
DEFAULT_LAMBDA = 2.0
DEFAULT_K = 5.0
DEFAULT_B = 2.0
DEFAULT_B0 = 0.2
DEFAULT_TAU = 1000
DEFAULT_M_TRAP = 1.0
DEFAULT_TARGET_RQ: Tuple[float, ...] = (2.0, 5.0, 10.0, 30.0, 70.0)
DEFAULT_Q0 = 0.17
DEFAULT_BETA_PLATEAU = 0.20
DEFAULT_RQ_TOLERANCE = 0.15
PLATEAU_RQ_MIN = 15.0

THRESHOLD_FREEZE_MODES = ("drawing", "round")

MIN_FIT_SAMPLES = 30
MIN_BIN_COUNT = 5
MIN_FIT_BINS = 3
BINS_PER_DECADE = 10
R_MAX_FACTOR = 10
EXACT_SUM_SPAN = 4096
CUT_MARGIN = 1e-9

CONFIG_FILENAME = "threshold-market.ini"
OUTPUT_DIR_ENV = "THRESHOLD_MARKET_OUT"

ROUNDS_CSV = "rounds.csv"
DAILY_CSV = "daily.csv"
RESETS_CSV = "resets.csv"
ACTIVITY_CSV = "activity.csv"
FITS_CSV = "fits.csv"
FIGURE_CSV = "figure_data.csv"
MANIFEST_JSON = "manifest.json"
INTEROCCURRENCE_CSV = "interoccurrence_RQ{value}.csv"
REPLICA_DIR = "replica_{index}"

CSV_HEADERS: Dict[str, Tuple[str, ...]] = {
    ROUNDS_CSV: ("round", "M"),
    DAILY_CSV: ("day", "ln_price", "return"),
    RESETS_CSV: ("round", "pre_reset_M"),
    ACTIVITY_CSV: ("drawing", "site", "d"),
    FITS_CSV: ("R_Q", "Q", "q_fit", "beta_fit", "rms_log_residual", "n_events"),
    FIGURE_CSV: ("R_Q", "r", "empirical_P", "fitted_P", "paper_law_P"),
    "interoccurrence": ("r", "empirical_P", "fitted_P"),
}

FLOAT_FORMAT = "%.17g"
