import argparse
import logging

from app.core.errors import ConfigurationError
from app.services.scenarios import list_presets, write_preset

logger = logging.getLogger(__name__)


def presets_list(args: argparse.Namespace) -> int:
    for name in list_presets():
        print(name)
    return 0


def presets_write(args: argparse.Namespace) -> int:
    try:
        path = write_preset(args.name, args.path)
        print(path)
        return 0
    except ConfigurationError as e:
        logger.error("Config Error in presets write: %s", e)
        return e.exit_code
    except OSError as e:
        logger.error("Disk Error in presets write: %s", e)
        return 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("presets", help="list or copy the bundled scenario files")
    verbs = parser.add_subparsers(dest="presets_verb", required=True)
    verbs.add_parser("list", help="names of the bundled presets").set_defaults(func=presets_list)
    write = verbs.add_parser("write", help="copy a preset to a file or directory")
    write.add_argument("name")
    write.add_argument("path")
    write.set_defaults(func=presets_write)
