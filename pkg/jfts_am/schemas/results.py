"""
Result schemas

Plan documents, ASE curves and Monte Carlo reports, as written by the CLI.
"""
import json
import math
from typing import Any, Optional

from pydantic import ConfigDict, Field, field_validator, model_validator

from jfts_am.models.enums import PolicyKind
from jfts_am.schemas.model_config import AppBaseModel


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class PlanDocument(AppBaseModel):
    """Serializable form of a solved plan"""

    model_config = ConfigDict(populate_by_name=True)

    kind: PolicyKind
    gamma_bar_db: float
    tber: float
    cutoff: Optional[float]  # None when the plan never transmits
    boundaries: list[float]
    powers: list[float]
    modes: list[int]  # bits/symbol of each region
    power_law: str  # "constant" or "inversion" (S ∝ 1/γ inside a region)
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    metadata: dict[str, Any] = Field(default_factory=dict)

    @field_validator("cutoff", "lambda_")
    @classmethod
    def drop_non_finite(cls, v: Optional[float]) -> Optional[float]:
        return _finite_or_none(v)

    def to_json(self) -> str:
        """Sorted keys, so equal plans serialize to identical bytes"""
        payload = self.model_dump(mode="json", by_alias=True)
        return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


class AsePoint(AppBaseModel):
    gamma_bar_db: float
    ase_analytic: float = Field(..., ge=0)
    ase_mc: Optional[float] = None
    ase_mc_stderr: Optional[float] = None
    mean_power: Optional[float] = None
    mean_ber: Optional[float] = None
    infeasible: bool = False


class AseCurve(AppBaseModel):
    """ASE against average SNR for one (policy, scenario, TBER)"""

    policy: PolicyKind
    scenario: str
    tber: float = Field(..., gt=0, lt=0.2)
    p_max: int = Field(..., ge=1)
    points: list[AsePoint] = Field(..., min_length=1)
    monotone: bool = True

    @model_validator(mode="after")
    def check_grid_and_range(self) -> "AseCurve":
        grid = [p.gamma_bar_db for p in self.points]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("γ̄ grid must be strictly increasing")
        for point in self.points:
            if point.ase_analytic > self.p_max * (1.0 + 1e-9):
                raise ValueError(
                    f"ASE {point.ase_analytic} above p_max={self.p_max} at {point.gamma_bar_db} dB"
                )
        return self

    @property
    def grid_db(self) -> list[float]:
        return [p.gamma_bar_db for p in self.points]

    @property
    def ase_values(self) -> list[float]:
        return [p.ase_analytic for p in self.points]


class McReport(AppBaseModel):
    """Monte Carlo estimates for one plan, each with its standard error"""

    sample_count: int = Field(..., ge=1)
    seed: int
    stream: int = 0
    bernoulli: bool = False
    ase: float
    ase_stderr: float
    mean_power: float
    mean_power_stderr: float
    mean_ber: float
    mean_ber_stderr: float
    modes: list[int]
    occupancy: list[float]
    occupancy_stderr: list[float]
    region_ber: list[Optional[float]]

    @model_validator(mode="after")
    def occupancy_is_distribution(self) -> "McReport":
        if not (len(self.modes) == len(self.occupancy) == len(self.occupancy_stderr)):
            raise ValueError("occupancy must list one entry per mode")
        if abs(sum(self.occupancy) - 1.0) > 1e-12:
            raise ValueError(f"occupancy sums to {sum(self.occupancy)!r}, not 1")
        return self
