import argparse
import logging
from typing import List

from app.core.errors import ConfigurationError, EpidemicError
from app.routes.common import add_run_flags, overrides_from
from app.services.scenarios import load_scenario, sweep

logger = logging.getLogger(__name__)


def parse_values(raw: str) -> List[float]:
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"--values must be a comma-separated list of numbers, got {raw!r}")
    if not values:
        raise ConfigurationError("--values is empty")
    return values


def run_sweep(args: argparse.Namespace) -> int:
    try:
        overrides = overrides_from(args)
        # the output root is handed to sweep() so every value gets its own directory
        out = overrides.pop("out", None)
        config = load_scenario(args.config, overrides)
        code, path = sweep(config, args.param, parse_values(args.values),
                           out_dir=out, workers=args.workers, use_cache=args.cache)
        print(f"sweep summary: {path}")
        return code
    except ConfigurationError as e:
        logger.error("Config Error in sweep: %s", e)
        return e.exit_code
    except EpidemicError as e:
        logger.error("Solver Error in sweep: %s", e)
        return e.exit_code
    except OSError as e:
        logger.error("Disk Error in sweep: %s", e)
        return 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="run a scenario once per value of a numeric field")
    parser.add_argument("config", help="YAML scenario file or preset name")
    parser.add_argument("--param", required=True, help="dotted field path, e.g. control.c2_log_factor")
    parser.add_argument("--values", required=True, help="comma-separated values")
    parser.add_argument("--workers", type=int, default=None, help="parallel processes (default MSEIR_SWEEP_WORKERS)")
    parser.add_argument("--cache", action="store_true", help="reuse solved schedules from the cache directory")
    add_run_flags(parser)
    parser.set_defaults(func=run_sweep)
