import argparse
import sys
from typing import List, Optional

from app.core.config import configure_logging
from app.routes import optimize, presets, simulate, sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.main",
        description="Multi-strain SEIR simulator with waning immunity and optimal lockdown control",
    )
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    verbs = parser.add_subparsers(dest="verb", required=True)
    simulate.register(verbs)
    optimize.register(verbs)
    sweep.register(verbs)
    presets.register(verbs)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(quiet=args.quiet)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
