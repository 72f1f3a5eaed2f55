"""`sweep`: ASE against average SNR for every (policy, TBER), as CSV"""
import argparse

from jfts_am.commands import common
from jfts_am.schemas.run_config import parse_policies, parse_tbers
from jfts_am.services import ase_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="emit ASE curves as CSV")
    common.add_scenario_args(parser)
    parser.add_argument("--policy", default="all", help="`all` or a comma list")
    parser.add_argument("--tber", default="1e-3", help="comma list, e.g. 1e-3,1e-6")
    parser.add_argument("--snr", required=True, help="average SNR grid in dB, start:stop:step")
    parser.add_argument("--mc", type=int, default=0, help="Monte Carlo samples per point (0 = analytic only)")
    parser.add_argument("--bernoulli", action="store_true", help="draw bit errors instead of expected errors")
    parser.add_argument("--workers", type=int, default=None, help="threads across grid points")
    common.add_numerics_args(parser)
    common.add_output_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    fields = {
        "policies": parse_policies(args.policy),
        "tbers": parse_tbers(args.tber),
        "grid_db": ase_service.parse_grid(args.snr),
        "mc_samples": args.mc,
        "bernoulli": args.bernoulli,
    }
    if args.workers is not None:
        fields["workers"] = args.workers
    config = common.build_config(args, **fields)
    cfg = common.numerics(config)

    curves = [
        ase_service.sweep(
            kind, config.scenario, tber, config.grid_db, cfg,
            mc_count=config.mc_samples or None,
            seed=config.seed,
            workers=config.workers,
            bernoulli=config.bernoulli,
        )
        for kind in config.policies
        for tber in config.tbers
    ]
    metadata = config.metadata()
    if config.mc_samples:
        metadata.update(mc_samples=config.mc_samples, bernoulli=config.bernoulli)
    common.emit(ase_service.curves_to_csv(curves, metadata), config.output)
    return 0
