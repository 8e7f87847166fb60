import argparse
import logging

from app.core.errors import ConfigurationError, EpidemicError
from app.models.scenario import OptimizeControl
from app.routes.common import add_run_flags, overrides_from
from app.services.scenarios import load_scenario, run_scenario

logger = logging.getLogger(__name__)


def optimize(args: argparse.Namespace) -> int:
    try:
        config = load_scenario(args.config, overrides_from(args))
        if not isinstance(config.control, OptimizeControl):
            raise ConfigurationError(f"{config.name} has control.mode={config.control.mode}; optimize needs mode: optimize")
        return run_scenario(config, use_cache=args.cache).exit_code
    except ConfigurationError as e:
        logger.error("Config Error in optimize: %s", e)
        return e.exit_code
    except EpidemicError as e:
        logger.error("Solver Error in optimize: %s", e)
        return e.exit_code
    except OSError as e:
        logger.error("Disk Error in optimize: %s", e)
        return 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("optimize", help="solve for the optimal lockdown schedule")
    parser.add_argument("config", help="YAML scenario file or preset name")
    add_run_flags(parser)
    parser.add_argument("--cache", action="store_true", help="reuse solved schedules from the cache directory")
    parser.set_defaults(func=optimize)
