"""`plan`: solve one policy at one operating point and emit the plan document"""
import argparse

from jfts_am.commands import common
from jfts_am.models.enums import BerWeighting, IberReading, PolicyKind
from jfts_am.schemas.link import LinkBudget
from jfts_am.schemas.run_config import parse_policies, parse_tbers
from jfts_am.services import ase_service, jfts_service, policy_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("plan", help="solve one policy, emit a JSON plan document")
    common.add_scenario_args(parser)
    parser.add_argument("--policy", required=True)
    parser.add_argument("--tber", required=True)
    parser.add_argument("--snr", required=True, help="average SNR in dB")
    parser.add_argument("--reading", choices=[r.value for r in IberReading],
                        default=IberReading.INSTANTANEOUS.value,
                        help="boundary identity for arate-cpow-iber")
    parser.add_argument("--weighting", choices=[w.value for w in BerWeighting],
                        default=BerWeighting.BITS.value, help="average BER weighting for arate-cpow-aber")
    parser.add_argument("--no-closed-form-check", action="store_true",
                        help="skip back-substitution of the printed closed forms")
    common.add_numerics_args(parser)
    common.add_output_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = common.build_config(
        args,
        policies=parse_policies(args.policy),
        tbers=parse_tbers(args.tber),
        grid_db=ase_service.parse_grid(args.snr),
    )
    cfg = common.numerics(config)
    kind = config.policies[0]
    params = config.scenario.to_params()
    coeffs = jfts_service.get_coefficients(params, cfg)
    link = LinkBudget.from_db(config.grid_db[0], config.tbers[0])
    check = False if args.no_closed_form_check else None

    if kind is PolicyKind.ARATE_CPOW_IBER:
        plan = policy_service.solve_arate_cpow_iber(
            link, None, params, cfg, coeffs=coeffs, reading=IberReading(args.reading),
            check_closed_forms=check,
        )
    elif kind is PolicyKind.ARATE_CPOW_ABER:
        plan = policy_service.solve_arate_cpow_aber(
            link, None, params, cfg, coeffs=coeffs, weighting=BerWeighting(args.weighting),
            check_closed_forms=check,
        )
    else:
        plan = policy_service.solve(kind, link, None, params, cfg, coeffs=coeffs,
                                    check_closed_forms=check)

    metadata = {**config.metadata(), "ase_analytic": ase_service.ase_analytic(plan, coeffs)}
    document = policy_service.to_document(plan, metadata)
    common.emit(document.to_json(), config.output)
    return 0
