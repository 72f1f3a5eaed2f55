"""
Run configuration

Everything one CLI invocation needs, validated before any numerics run.
"""
from pathlib import Path
from typing import Any, Optional

from pydantic import Field, field_validator, model_validator

from jfts_am.core.config import settings
from jfts_am.core.exceptions import InvalidArgumentError
from jfts_am.models.enums import PolicyKind, SeriesForm
from jfts_am.schemas.channel import NumericsConfig, ScenarioPreset
from jfts_am.schemas.model_config import AppBaseModel

SUBCOMMANDS = ("pdf", "sample", "plan", "sweep", "verify", "presets")


def parse_policies(text: str) -> list[PolicyKind]:
    """`all`, or a comma list of policy names (hyphens or underscores)"""
    names = [part.strip().lower() for part in text.split(",") if part.strip()]
    if not names:
        raise InvalidArgumentError("no policy given")
    if names == ["all"]:
        return list(PolicyKind)
    valid = {kind.cli_name: kind for kind in PolicyKind}
    kinds = []
    for name in names:
        kind = valid.get(name.replace("_", "-"))
        if kind is None:
            raise InvalidArgumentError(
                f"unknown policy {name!r}; valid policies: all, {', '.join(sorted(valid))}"
            )
        if kind not in kinds:
            kinds.append(kind)
    return kinds


def parse_tbers(text: str) -> list[float]:
    """Comma list of target BERs, scientific notation allowed"""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InvalidArgumentError(f"unreadable target BER list {text!r}") from exc
    if not values:
        raise InvalidArgumentError("no target BER given")
    return values


def parse_channel(text: str) -> tuple[float, float, float]:
    """Inline scenario `K_dB,Sh_dB,delta`"""
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 3:
        raise InvalidArgumentError(f"inline channel needs K_dB,Sh_dB,delta, got {text!r}")
    try:
        K_dB, Sh_dB, delta = (float(part) for part in parts)
    except ValueError as exc:
        raise InvalidArgumentError(f"unreadable inline channel {text!r}") from exc
    return K_dB, Sh_dB, delta


class RunConfig(AppBaseModel):
    """One CLI invocation"""

    subcommand: str
    scenario: Optional[ScenarioPreset] = None
    policies: list[PolicyKind] = Field(default_factory=list)
    tbers: list[float] = Field(default_factory=list)
    grid_db: list[float] = Field(default_factory=list)
    mc_samples: Optional[int] = Field(default=None, ge=0)
    seed: int = Field(default_factory=lambda: settings.SEED, ge=0, lt=2 ** 64)
    output: Optional[Path] = None
    m: Optional[int] = Field(default=None, ge=1, le=64)
    t_max: Optional[int] = Field(default=None, ge=0, le=170)
    series_form: Optional[SeriesForm] = None
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    bernoulli: bool = False

    @field_validator("subcommand")
    @classmethod
    def known_subcommand(cls, v: str) -> str:
        if v not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {v!r}; valid: {', '.join(SUBCOMMANDS)}")
        return v

    @field_validator("tbers")
    @classmethod
    def tbers_in_range(cls, v: list[float]) -> list[float]:
        for tber in v:
            if not 0.0 < tber < 0.2:
                raise ValueError(f"target BER must lie in (0, 0.2), got {tber}")
        return v

    @model_validator(mode="after")
    def needs_scenario_and_grid(self) -> "RunConfig":
        if self.subcommand in ("pdf", "sample", "plan", "sweep"):
            if self.scenario is None:
                raise ValueError(f"{self.subcommand} needs a scenario")
            if not self.grid_db:
                raise ValueError("SNR grid is empty")
        if self.subcommand in ("plan", "sweep"):
            if not self.policies:
                raise ValueError(f"{self.subcommand} needs a policy")
            if not self.tbers:
                raise ValueError(f"{self.subcommand} needs a target BER")
        if self.subcommand == "sweep" and any(b <= a for a, b in zip(self.grid_db, self.grid_db[1:])):
            raise ValueError("sweep SNR grid must be strictly increasing")
        if self.subcommand == "plan":
            if len(self.policies) != 1 or len(self.tbers) != 1 or len(self.grid_db) != 1:
                raise ValueError("plan takes exactly one policy, one target BER and one SNR")
        return self

    def numerics(self) -> NumericsConfig:
        overrides: dict[str, Any] = {}
        if self.m is not None:
            overrides["m"] = self.m
        if self.t_max is not None:
            overrides["t_max"] = self.t_max
        if self.series_form is not None:
            overrides["series_form"] = self.series_form
        return NumericsConfig(**overrides)

    def metadata(self) -> dict[str, Any]:
        """Fields for the `#` header of every output"""
        fields: dict[str, Any] = {"seed": self.seed}
        if self.scenario is not None:
            fields.update(self.scenario.describe())
        fields.update(self.numerics().describe())
        return fields
