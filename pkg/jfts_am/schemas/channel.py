"""
Channel input schemas

JFTS shape parameters, numerical knobs for the density series and named
scenario presets.
"""
from typing import Any, Optional

from pydantic import Field, field_validator, model_validator

from jfts_am.core.config import settings
from jfts_am.models.enums import PhaseRule, SeriesForm
from jfts_am.schemas.model_config import FrozenModel


def db_to_linear(value_db: float) -> float:
    """Power ratio from decibels"""
    return 10.0 ** (value_db / 10.0)


class JftsParams(FrozenModel):
    """
    Ricean x TWDP channel shape.

    P1 and P2 default to the unit-mean-gain split
    P1 = 1/(2(1+K)), P2 = 1/(2(1+S_h)), which makes Ω = 1.
    """

    K: float = Field(..., ge=0)
    S_h: float = Field(..., ge=0)
    delta: float = Field(..., ge=0, le=1)
    P1: float = Field(..., gt=0)
    P2: float = Field(..., gt=0)
    K_dB: Optional[float] = None
    Sh_dB: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def default_unit_gain_split(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        for power_key, shape_key in (("P1", "K"), ("P2", "S_h")):
            shape = data.get(shape_key)
            if data.get(power_key) is None and isinstance(shape, (int, float)) and shape >= 0:
                data[power_key] = 1.0 / (2.0 * (1.0 + float(shape)))
        return data

    @classmethod
    def from_db(
        cls,
        K_dB: float,
        Sh_dB: float,
        delta: float,
        P1: Optional[float] = None,
        P2: Optional[float] = None,
    ) -> "JftsParams":
        return cls(
            K=db_to_linear(K_dB),
            S_h=db_to_linear(Sh_dB),
            delta=delta,
            P1=P1,
            P2=P2,
            K_dB=K_dB,
            Sh_dB=Sh_dB,
        )

    @property
    def omega(self) -> float:
        """Mean-squared JFTS envelope"""
        return 4.0 * self.P1 * self.P2 * (1.0 + self.K) * (1.0 + self.S_h)

    def describe(self) -> dict[str, float]:
        return {
            "K": self.K,
            "S_h": self.S_h,
            "delta": self.delta,
            "P1": self.P1,
            "P2": self.P2,
        }


class NumericsConfig(FrozenModel):
    """Free numerical knobs of the density series and its oracles"""

    m: int = Field(default_factory=lambda: settings.QUADRATURE_ORDER, ge=1, le=64)
    t_max: int = Field(default_factory=lambda: settings.SERIES_T_MAX, ge=0, le=170)
    norm_tol: float = Field(default_factory=lambda: settings.NORM_TOL, gt=0)
    series_form: SeriesForm = Field(default_factory=lambda: SeriesForm(settings.SERIES_FORM))
    phase_rule: PhaseRule = Field(default_factory=lambda: PhaseRule(settings.PHASE_RULE))
    phase_order: int = Field(default_factory=lambda: settings.PHASE_ORDER, ge=1, le=256)
    # Poisson tail mass dropped when sizing the conditional series
    truncation_tail: float = Field(default=1e-13, gt=0, lt=1e-3)
    t_cap: int = Field(default=400, ge=1, le=2000)
    # Oracle quadrature: [0, oracle_upper · γ̄] on oracle_points log-spaced checks
    oracle_upper: float = Field(default=50.0, gt=1)
    oracle_points: int = Field(default=1000, ge=10)

    @model_validator(mode="after")
    def printed_form_needs_even_order(self) -> "NumericsConfig":
        if self.series_form is SeriesForm.PRINTED and self.m % 2 == 1:
            raise ValueError("printed series form needs an even quadrature order (r_h = 0 node)")
        if self.t_cap < self.t_max:
            raise ValueError("t_cap must not be below t_max")
        return self

    def describe(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "t_max": self.t_max,
            "norm_tol": self.norm_tol,
            "series_form": self.series_form.value,
            "phase_rule": self.phase_rule.value,
            "phase_order": self.phase_order,
        }


class ScenarioPreset(FrozenModel):
    """Named channel scenario, parameters in dB"""

    name: str = Field(..., min_length=1)
    K_dB: float
    Sh_dB: float
    delta: float = Field(..., ge=0, le=1)
    P1: Optional[float] = Field(default=None, gt=0)
    P2: Optional[float] = Field(default=None, gt=0)

    @field_validator("name")
    @classmethod
    def name_is_slug(cls, v: str) -> str:
        if any(ch.isspace() for ch in v):
            raise ValueError("scenario names cannot contain whitespace")
        return v.lower()

    def to_params(self) -> JftsParams:
        return JftsParams.from_db(self.K_dB, self.Sh_dB, self.delta, P1=self.P1, P2=self.P2)

    def describe(self) -> dict[str, Any]:
        described: dict[str, Any] = {
            "scenario": self.name,
            "K_dB": self.K_dB,
            "Sh_dB": self.Sh_dB,
            "delta": self.delta,
        }
        if self.P1 is not None:
            described["P1"] = self.P1
        if self.P2 is not None:
            described["P2"] = self.P2
        return described
