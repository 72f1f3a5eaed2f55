"""`pdf`: density and CDF on a log-spaced SNR grid"""
import argparse

import numpy as np
import pandas as pd

from jfts_am.commands import common
from jfts_am.core.exceptions import InvalidArgumentError
from jfts_am.observability.logging import get_logger
from jfts_am.services import ase_service, jfts_service

logger = get_logger()


def register(subparsers) -> None:
    parser = subparsers.add_parser("pdf", help="dump the SNR density grid as CSV")
    common.add_scenario_args(parser)
    parser.add_argument("--snr", required=True, help="average SNR in dB, start:stop:step or list")
    parser.add_argument("--points", type=int, default=None, help="grid points per average SNR")
    parser.add_argument("--lower", type=float, default=1e-4, help="lowest gamma as a fraction of the average")
    common.add_numerics_args(parser)
    common.add_output_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = common.build_config(args, grid_db=ase_service.parse_grid(args.snr))
    cfg = common.numerics(config)
    points = args.points or cfg.oracle_points
    if points < 2 or not 0.0 < args.lower < 1.0:
        raise InvalidArgumentError("--points must be >= 2 and --lower in (0, 1)")
    coeffs = jfts_service.get_coefficients(config.scenario.to_params(), cfg)

    frames = []
    for gamma_bar_db in config.grid_db:
        gamma_bar = 10.0 ** (gamma_bar_db / 10.0)
        gamma = gamma_bar * np.logspace(np.log10(args.lower), np.log10(cfg.oracle_upper), points)
        frames.append(
            pd.DataFrame({
                "gamma_bar_db": gamma_bar_db,
                "gamma": gamma,
                "pdf": jfts_service.pdf(gamma, gamma_bar, coeffs),
                "cdf": jfts_service.cdf(gamma, gamma_bar, coeffs),
            })
        )
    frame = pd.concat(frames, ignore_index=True)
    logger.info("Density grid written", rows=len(frame), scenario=config.scenario.name)
    common.emit(common.csv_text(frame, config.metadata()), config.output)
    return 0
