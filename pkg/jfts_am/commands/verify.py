"""`verify`: run the acceptance suite and print the pass/fail table"""
import argparse
from pathlib import Path

from jfts_am.commands import common
from jfts_am.models.enums import CheckStatus
from jfts_am.observability.metrics import write_metrics
from jfts_am.services.verify_service import AcceptanceSuite, format_table


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="run the acceptance checks")
    parser.add_argument("--quick", action="store_true", help="10^5-sample checks on reduced grids")
    parser.add_argument("--strict", action="store_true", help="treat flagged checks as failures")
    parser.add_argument("--metrics-out", type=Path, default=None,
                        help="write Prometheus text metrics after the run")
    common.add_numerics_args(parser)
    common.add_output_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = common.build_config(args)
    suite = AcceptanceSuite(quick=args.quick, cfg=common.numerics(config), seed=config.seed)
    checks = suite.run()
    common.emit(format_table(checks), config.output)
    if args.metrics_out is not None:
        write_metrics(args.metrics_out)
    failed = not suite.passed
    if args.strict:
        failed = failed or any(check.status is CheckStatus.FLAGGED for check in checks)
    return 1 if failed else 0
