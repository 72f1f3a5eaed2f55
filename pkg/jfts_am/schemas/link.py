"""
Link schemas

Transmission modes and the link budget (average power, SNR, target BER).
"""
import math

from pydantic import Field, field_validator

from jfts_am.schemas.model_config import FrozenModel

DEFAULT_BITS = (0, 1, 2, 3, 4, 5, 6, 7, 8)


class ModulationSet(FrozenModel):
    """
    Ordered modes with p_l bits/symbol and M_l = 2^{p_l}.

    p = 0 is the no-transmission mode. Default: off plus 2..256-QAM.
    """

    bits: tuple[int, ...] = Field(default=DEFAULT_BITS)

    @field_validator("bits")
    @classmethod
    def strictly_increasing(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("modulation set cannot be empty")
        if v[0] < 0:
            raise ValueError("bits per symbol must be >= 0")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("bits per symbol must be strictly increasing")
        if v[-1] == 0:
            raise ValueError("modulation set needs at least one transmitting mode")
        if v[-1] > 30:
            raise ValueError("more than 30 bits per symbol is not supported")
        return v

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(2 ** p for p in self.bits)

    @property
    def active_indices(self) -> tuple[int, ...]:
        """Indices of modes that carry bits"""
        return tuple(i for i, p in enumerate(self.bits) if p > 0)

    @property
    def off_index(self) -> int | None:
        return 0 if self.bits[0] == 0 else None

    @property
    def p_max(self) -> int:
        return self.bits[-1]

    @property
    def M_max(self) -> int:
        return 2 ** self.p_max

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple("off" if p == 0 else f"{2 ** p}-QAM" for p in self.bits)


class LinkBudget(FrozenModel):
    """Average transmit power S̄, average SNR γ̄ = S̄/σ_n² and target BER"""

    gamma_bar: float = Field(..., gt=0)
    tber: float = Field(..., gt=0, lt=0.2)
    s_bar: float = Field(default=1.0, gt=0)

    @classmethod
    def from_db(cls, gamma_bar_db: float, tber: float, s_bar: float = 1.0) -> "LinkBudget":
        return cls(gamma_bar=10.0 ** (gamma_bar_db / 10.0), tber=tber, s_bar=s_bar)

    @property
    def gamma_bar_db(self) -> float:
        return 10.0 * math.log10(self.gamma_bar)

    @property
    def noise_variance(self) -> float:
        return self.s_bar / self.gamma_bar
