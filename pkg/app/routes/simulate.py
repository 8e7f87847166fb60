import argparse
import logging

from app.core.errors import ConfigurationError, EpidemicError
from app.models.scenario import OptimizeControl
from app.routes.common import add_run_flags, overrides_from
from app.services.scenarios import load_scenario, run_scenario

logger = logging.getLogger(__name__)


def simulate(args: argparse.Namespace) -> int:
    try:
        config = load_scenario(args.config, overrides_from(args))
        if isinstance(config.control, OptimizeControl):
            raise ConfigurationError(f"{config.name} has control.mode=optimize; run it with the optimize verb")
        return run_scenario(config).exit_code
    except ConfigurationError as e:
        logger.error("Config Error in simulate: %s", e)
        return e.exit_code
    except EpidemicError as e:
        logger.error("Integration Error in simulate: %s", e)
        return e.exit_code
    except OSError as e:
        logger.error("Disk Error in simulate: %s", e)
        return 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="integrate a scenario with a fixed control")
    parser.add_argument("config", help="YAML scenario file or preset name")
    add_run_flags(parser)
    parser.set_defaults(func=simulate)
