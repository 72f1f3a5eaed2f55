"""Argument groups and output handling shared by the subcommands"""
import argparse
import sys
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from jfts_am.core.exceptions import InvalidArgumentError, invalid_argument_from
from jfts_am.models.enums import SeriesForm
from jfts_am.schemas.channel import NumericsConfig
from jfts_am.schemas.run_config import RunConfig, parse_channel
from jfts_am.services import ase_service, scenario_service


def add_scenario_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--scenario", help="preset name, see `jfts-am presets`")
    group.add_argument("--channel", metavar="K_dB,Sh_dB,DELTA", help="inline channel parameters")


def add_numerics_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", type=int, default=None, help="Gauss-Hermite order")
    parser.add_argument("--t-max", type=int, default=None, help="series truncation index")
    parser.add_argument("--series-form", choices=[form.value for form in SeriesForm], default=None)


def add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="defaults to JFTS_SEED")
    parser.add_argument("--out", type=Path, default=None, help="output file (default stdout)")


def build_config(args: argparse.Namespace, **fields: Any) -> RunConfig:
    """RunConfig from parsed arguments; validation errors become argument errors"""
    scenario = None
    if getattr(args, "scenario", None) or getattr(args, "channel", None):
        inline = parse_channel(args.channel) if args.channel else None
        scenario = scenario_service.resolve_scenario(
            args.scenario, inline, Path(args.preset_file) if args.preset_file else None
        )
    values: dict[str, Any] = {
        "subcommand": args.command,
        "scenario": scenario,
        "output": getattr(args, "out", None),
        "m": getattr(args, "m", None),
        "t_max": getattr(args, "t_max", None),
        "series_form": getattr(args, "series_form", None),
    }
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    values.update(fields)
    try:
        config = RunConfig(**values)
        config.numerics()
    except ValidationError as exc:
        raise invalid_argument_from(exc) from exc
    return config


def numerics(config: RunConfig) -> NumericsConfig:
    try:
        return config.numerics()
    except ValidationError as exc:
        raise invalid_argument_from(exc) from exc


def csv_text(frame, metadata: dict[str, Any]) -> str:
    lines = ase_service.metadata_lines(metadata)
    body = frame.to_csv(index=False, float_format="%.12g", na_rep="", lineterminator="\n")
    return "".join(line + "\n" for line in lines) + body


def emit(text: str, output: Optional[Path]) -> None:
    """Write to the output file, or stdout"""
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        Path(output).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise InvalidArgumentError(f"cannot write {output}: {exc}") from exc
