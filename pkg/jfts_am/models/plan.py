"""
Policy plan containers

A solved plan partitions the SNR axis into regions [γ_l, γ_{l+1}) with
γ_L = +∞; region l uses modes[l]. Below the cutoff nothing is sent.
"""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from jfts_am.models.enums import IberReading, PolicyKind
from jfts_am.schemas.link import LinkBudget, ModulationSet


@dataclass(frozen=True)
class ClosedFormCheck:
    """Back-substitution of one printed closed form"""

    equation: str
    region: int
    value: float
    residual: float
    adopted: bool
    domain_errors: int = 0


@dataclass
class PlanDiagnostics:
    """Residuals and search history recorded by a solver"""

    residuals: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    closed_forms: list[ClosedFormCheck] = field(default_factory=list)
    tail_ber: list[float] = field(default_factory=list)  # expected BER tail at each boundary
    brackets: list[tuple[float, float]] = field(default_factory=list)
    lambda_sign: Optional[int] = None
    infeasible_reason: Optional[str] = None
    notes: list[str] = field(default_factory=list)

    @property
    def formula_mismatch_flags(self) -> list[bool]:
        return [not check.adopted for check in self.closed_forms]

    def as_dict(self) -> dict[str, Any]:
        return {
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
            "iterations": self.iterations,
            "formula_mismatch_flags": self.formula_mismatch_flags,
            "closed_forms": [
                {
                    "equation": c.equation,
                    "region": c.region,
                    "value": c.value if np.isfinite(c.value) else None,
                    "residual": c.residual if np.isfinite(c.residual) else None,
                    "adopted": c.adopted,
                    "lambert_w_domain_errors": c.domain_errors,
                }
                for c in self.closed_forms
            ],
            "tail_ber": [float(v) for v in self.tail_ber],
            "brackets": [[float(lo), float(hi)] for lo, hi in self.brackets],
            "lambda_sign": self.lambda_sign,
            "infeasible_reason": self.infeasible_reason,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class PolicyPlan:
    """
    Boundaries (one per transmitting region, strictly increasing) and the
    power law inside each region.

    Constant-power plans send powers[l] throughout region l. Inversion plans
    send powers[l] · boundaries[l] / γ, i.e. powers[l] is the power at the
    region's lower boundary.
    """

    kind: PolicyKind
    modulation: ModulationSet
    link: LinkBudget
    boundaries: np.ndarray
    modes: tuple[int, ...]  # index into modulation.bits for each region
    powers: np.ndarray
    inversion: bool
    lam: Optional[float] = None
    reading: IberReading = IberReading.INSTANTANEOUS
    diagnostics: PlanDiagnostics = field(default_factory=PlanDiagnostics)

    def __post_init__(self) -> None:
        if len(self.boundaries) != len(self.modes) or len(self.powers) != len(self.modes):
            raise ValueError("boundaries, modes and powers must align")
        if np.any(np.diff(self.boundaries) <= 0.0):
            raise ValueError("plan boundaries must be strictly increasing")
        if np.any(self.powers < 0.0):
            raise ValueError("plan powers must be >= 0")
        self.boundaries.setflags(write=False)
        self.powers.setflags(write=False)

    @property
    def is_all_off(self) -> bool:
        return len(self.modes) == 0

    @property
    def cutoff(self) -> float:
        return float(self.boundaries[0]) if len(self.boundaries) else float("inf")

    @property
    def upper_edges(self) -> np.ndarray:
        """γ_{l+1} for each region, +inf for the last"""
        return np.append(self.boundaries[1:], np.inf)

    @property
    def region_bits(self) -> np.ndarray:
        return np.array([self.modulation.bits[m] for m in self.modes], dtype=float)

    @property
    def region_sizes(self) -> np.ndarray:
        return np.array([self.modulation.sizes[m] for m in self.modes], dtype=float)

    def region_index(self, gamma: np.ndarray) -> np.ndarray:
        """Region of each γ, -1 below the cutoff"""
        return np.searchsorted(self.boundaries, gamma, side="right") - 1
