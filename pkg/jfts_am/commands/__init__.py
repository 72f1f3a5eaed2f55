import argparse

from jfts_am import __version__
from jfts_am.commands import pdf, plan, presets, sample, sweep, verify

COMMANDS = (pdf, sample, plan, sweep, verify, presets)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jfts-am",
        description="Adaptive M-QAM over the JFTS fading/shadowing channel",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--preset-file", default=None,
                        help="TOML file with extra scenario presets")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser
