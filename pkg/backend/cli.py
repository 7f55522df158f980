"""
Command-line driver: ``python main.py <subcommand> [flags]``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 when the
campaign cannot run (bad config, invalid frame, singular element, ...).
"""

import argparse
import logging
from typing import Any, Dict, List, Optional, Sequence

from .campaigns import CAMPAIGNS, load_config, run_campaign
from .config import LOG_LEVEL
from .exceptions import CliffordError

logger = logging.getLogger(__name__)


def _pair(text: str) -> List[int]:
    try:
        a, b = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers like '3,1', got '{text}'")
    return [a, b]


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clifford-ym",
        description="Spin connections of general form and covariantly constant Yang-Mills solutions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in CAMPAIGNS:
        cmd = sub.add_parser(name, help=f"run the {name} campaign")
        cmd.add_argument("--config", help="campaign config (JSON)")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--points", type=int)
        cmd.add_argument("--sig", type=_pair, help="algebra signature p,q")
        cmd.add_argument("--base", type=_pair, help="base space signature k,l")
        cmd.add_argument("--sigma", type=_floats, help="comma-separated sigma values")
        cmd.add_argument("--out", help="path of the JSON report")
        cmd.add_argument("--csv", action="store_true", default=None, help="also write per-point residuals")
        cmd.add_argument("--exact", action="store_true", default=None, help="rational arithmetic (n <= 4)")
        cmd.add_argument("--verbose", "-v", action="store_true")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "points": args.points,
        "signature": args.sig,
        "base": args.base,
        "sigma": args.sigma,
        "out": args.out,
        "csv": args.csv,
        "exact": args.exact,
    }


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, overrides_from_args(args))
        report = run_campaign(args.command, config)
    except CliffordError as e:
        logger.error(f"{args.command} aborted: {type(e).__name__}: {e}")
        return 2

    print(report.summary_text())
    if report.passed:
        return 0
    logger.warning(f"{len(report.failures())} check(s) failed: {', '.join(report.failures())}")
    return 1
