"""`presets`: list built-in and file scenarios"""
import argparse
from pathlib import Path

import pandas as pd

from jfts_am.commands import common
from jfts_am.services import scenario_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("presets", help="list scenario presets")
    parser.add_argument("--out", type=Path, default=None)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    presets = scenario_service.available_presets(Path(args.preset_file) if args.preset_file else None)
    frame = pd.DataFrame(
        [
            {
                "name": preset.name,
                "K_dB": preset.K_dB,
                "Sh_dB": preset.Sh_dB,
                "delta": preset.delta,
                "source": "builtin" if scenario_service.BUILTIN_PRESETS.get(name) == preset else "file",
            }
            for name, preset in sorted(presets.items())
        ]
    )
    common.emit(frame.to_csv(index=False, float_format="%.12g", lineterminator="\n"), args.out)
    return 0
