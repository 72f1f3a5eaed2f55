"""
Scenario Service

Built-in indoor scenarios and TOML preset files:

    [same-room]
    K_dB = 13
    Sh_dB = 12
    delta = 0.9
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from jfts_am.core.config import settings
from jfts_am.core.exceptions import InvalidArgumentError, invalid_argument_from
from jfts_am.observability.logging import get_logger
from jfts_am.schemas.channel import ScenarioPreset

logger = get_logger()

BUILTIN_PRESETS: dict[str, ScenarioPreset] = {
    preset.name: preset
    for preset in (
        ScenarioPreset(name="same-room", K_dB=13.0, Sh_dB=12.0, delta=0.9),
        ScenarioPreset(name="one-wall", K_dB=10.0, Sh_dB=6.0, delta=0.7),
        ScenarioPreset(name="two-walls", K_dB=7.0, Sh_dB=-1.0, delta=0.5),
        ScenarioPreset(name="three-walls", K_dB=4.0, Sh_dB=-6.0, delta=0.3),
        ScenarioPreset(name="fig3-same-room", K_dB=10.0, Sh_dB=10.5, delta=0.75),
        ScenarioPreset(name="fig3-2-3-walls", K_dB=6.5, Sh_dB=-1.5, delta=0.25),
    )
}

# Ordered from least to most obstructed
WALL_SCENARIOS = ("same-room", "one-wall", "two-walls", "three-walls")


def load_presets(path: Path) -> dict[str, ScenarioPreset]:
    """Parse a TOML preset file, one table per scenario"""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            document = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise InvalidArgumentError(f"preset file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InvalidArgumentError(f"preset file {path} is not valid TOML: {exc}") from exc

    presets: dict[str, ScenarioPreset] = {}
    for name, table in document.items():
        if not isinstance(table, dict):
            raise InvalidArgumentError(f"preset {name!r} in {path} must be a table")
        try:
            preset = ScenarioPreset(name=name, **table)
        except ValidationError as exc:
            raise invalid_argument_from(exc) from exc
        presets[preset.name] = preset
    logger.debug("Scenario presets loaded", path=str(path), count=len(presets))
    return presets


def available_presets(preset_file: Optional[Path] = None) -> dict[str, ScenarioPreset]:
    """Built-ins overlaid with the preset file (argument, else JFTS_PRESET_FILE)"""
    presets = dict(BUILTIN_PRESETS)
    source = preset_file or settings.PRESET_FILE
    if source:
        presets.update(load_presets(Path(source)))
    return presets


def resolve_scenario(
    name: Optional[str] = None,
    inline: Optional[tuple[float, float, float]] = None,
    preset_file: Optional[Path] = None,
) -> ScenarioPreset:
    """A preset by name, or an inline (K_dB, Sh_dB, Δ) triple"""
    if inline is not None:
        if name is not None:
            raise InvalidArgumentError("give either a scenario name or inline parameters, not both")
        K_dB, Sh_dB, delta = inline
        try:
            return ScenarioPreset(
                name=f"inline-{K_dB:g}-{Sh_dB:g}-{delta:g}", K_dB=K_dB, Sh_dB=Sh_dB, delta=delta
            )
        except ValidationError as exc:
            raise invalid_argument_from(exc) from exc
    if name is None:
        raise InvalidArgumentError("a scenario name or inline parameters are required")

    presets = available_presets(preset_file)
    key = name.strip().lower()
    if key not in presets:
        raise InvalidArgumentError(
            f"unknown scenario {name!r}; valid scenarios: {', '.join(sorted(presets))}"
        )
    return presets[key]
