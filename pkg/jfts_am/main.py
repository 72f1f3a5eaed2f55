"""
jfts-am entry point

Exit codes: 0 success, 1 infeasible plan, solver non-convergence or failed
verify, 2 argument or domain error.
"""
import sys
from typing import Optional, Sequence

from jfts_am.commands import build_parser
from jfts_am.core.exceptions import (
    ConvergenceError,
    DomainError,
    InfeasiblePlanError,
    InvalidArgumentError,
    NumericalOverflowError,
)
from jfts_am.observability.logging import bind_run_context, clear_run_context, get_logger

logger = get_logger()

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad arguments and 0 on --help/--version
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    bind_run_context(command=args.command)
    try:
        return args.handler(args)
    except (InvalidArgumentError, DomainError) as exc:
        logger.error("Invalid arguments", error=str(exc))
        print(f"jfts-am {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasiblePlanError, ConvergenceError, NumericalOverflowError) as exc:
        logger.error("Computation failed", error=str(exc), error_type=type(exc).__name__)
        print(f"jfts-am {args.command}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    finally:
        clear_run_context()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
