import os
import logging
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

OUTPUT_DIR = Path(os.getenv("MSEIR_OUTPUT_DIR", "out"))
CACHE_DIR = Path(os.getenv("MSEIR_CACHE_DIR", "app/cache"))
LOG_LEVEL = os.getenv("MSEIR_LOG_LEVEL", "INFO").upper()
SWEEP_WORKERS = int(os.getenv("MSEIR_SWEEP_WORKERS", "1"))

# ---- Numerics ----
DEFAULT_DT = 0.05              # days
CLAMP_REL_TOL = 1e-9           # negative overshoot allowed, as a share of P(0)

# ---- Analysis ----
PLATEAU_THRESHOLD = 0.02       # max - min share inside the window
DEFAULT_WINDOW = 90.0          # days

# ---- Forward-backward sweep ----
FBSM_RELAXATION = 0.5
FBSM_TOL = 1e-6
FBSM_MAX_ITER = 500

# ---- Output ----
CHART_MAX_ROWS = 5000
CSV_FLOAT_FORMAT = "%.17g"
SVG_HASH_SALT = "multistrain-seir"

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def configure_logging(quiet: bool = False) -> None:
    level = logging.WARNING if quiet else getattr(logging, LOG_LEVEL, logging.INFO)
    root = logging.getLogger()
    # repeated CLI invocations in one process must not stack handlers
    for handler in list(root.handlers):
        if getattr(handler, "_mseir", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler._mseir = True
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)
    # numba is chatty at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)
