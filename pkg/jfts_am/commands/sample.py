"""`sample`: seeded SNR draws from the Ricean x TWDP sampler"""
import argparse

import pandas as pd

from jfts_am.commands import common
from jfts_am.core.exceptions import InvalidArgumentError
from jfts_am.services import ase_service, jfts_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("sample", help="dump Monte Carlo SNR samples as CSV")
    common.add_scenario_args(parser)
    parser.add_argument("--snr", required=True, help="average SNR in dB")
    parser.add_argument("--count", type=int, default=ase_service.MIN_MC_SAMPLES)
    parser.add_argument("--stream", type=int, default=0, help="sub-stream index")
    common.add_output_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = common.build_config(args, grid_db=ase_service.parse_grid(args.snr))
    if args.stream < 0:
        raise InvalidArgumentError("--stream must be >= 0")
    params = config.scenario.to_params()
    frames = []
    for offset, gamma_bar_db in enumerate(config.grid_db):
        draw = jfts_service.sample_snr(
            params, 10.0 ** (gamma_bar_db / 10.0), args.count, config.seed, args.stream + offset
        )
        frames.append(pd.DataFrame({"gamma_bar_db": gamma_bar_db, "snr": draw.samples}))
    frame = pd.concat(frames, ignore_index=True)
    metadata = {**config.metadata(), "count": args.count, "stream": args.stream}
    common.emit(common.csv_text(frame, metadata), config.output)
    return 0
