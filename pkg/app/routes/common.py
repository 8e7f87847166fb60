import argparse
from typing import Any, Dict


def add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--dt", type=float, default=None, help="step size in days")
    parser.add_argument("--horizon", type=float, default=None, help="simulated days")
    parser.add_argument("--seed-day", type=float, default=None, dest="seed_day",
                        help="activation day of every strain after the first")
    parser.add_argument("--no-svg", action="store_true", help="skip the SVG charts")
    # also accepted before the verb
    parser.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only log warnings and errors")


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {
        "dt": args.dt,
        "horizon": args.horizon,
        "seed_day": args.seed_day,
        "out": args.out,
    }
    if args.no_svg:
        overrides["svg"] = False
    return {k: v for k, v in overrides.items() if v is not None}
