"""
Channel data containers

Frozen dataclasses produced by the jfts service. Arrays are treated as
read-only after construction, so instances can be shared across threads.
"""
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Optional

import numpy as np

from jfts_am.models.enums import SeriesForm

if TYPE_CHECKING:
    from jfts_am.schemas.channel import JftsParams, NumericsConfig

# Distinct γ̄ values kept per coefficient set; a default 0-40 dB sweep needs 41
MIXTURE_CACHE_SIZE = 64


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for weight e^{-x²}"""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self.nodes, self.weights)

    def integrate(self, values: np.ndarray) -> float:
        """Σ w_h g(r_h) for samples g(r_h) taken at the nodes"""
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class GammaMixture:
    """
    SNR density as a finite mixture of gamma kernels.

    f(γ) = Σ_h Σ_t weights[h, t] · Gamma(γ; shape t+1, rate rates[h]/γ̄)

    Weights are normalized (sum to 1). `log_normalization` is ln Z of the
    un-normalized series the weights came from.
    """

    gamma_bar: float
    weights: np.ndarray  # (H, T+1)
    rates: np.ndarray  # (H,) B_h, dimensionless
    log_normalization: float
    series_form: SeriesForm

    def __post_init__(self) -> None:
        _freeze(self.weights, self.rates)

    @property
    def t_max(self) -> int:
        return self.weights.shape[1] - 1

    @property
    def shapes(self) -> np.ndarray:
        return np.arange(self.weights.shape[1]) + 1

    @property
    def scaled_rates(self) -> np.ndarray:
        """B_h / γ̄, the kernel rates in 1/SNR units"""
        return self.rates / self.gamma_bar

    @property
    def normalization(self) -> float:
        return float(np.exp(self.log_normalization))

    @cached_property
    def active_kernels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened (weight, rate B_h/γ̄, shape index t) of the non-zero kernels"""
        h_idx, t_idx = np.nonzero(self.weights > 0.0)
        return (
            self.weights[h_idx, t_idx],
            self.scaled_rates[h_idx],
            t_idx.astype(float),
        )


@dataclass(frozen=True)
class JftsCoefficients:
    """
    Precomputed series coefficients for one (params, numerics) pair.

    The printed-definition tables C1..C4, T and b are always filled; A, B and R
    are None for odd m, where a node sits at r = 0.
    D1/D2 carry γ̄ and are produced per γ̄ by `printed_log_d`.
    The conditional-form tables (fade nodes, branch factors) back the
    default density.
    """

    params: "JftsParams"
    numerics: "NumericsConfig"
    rule: QuadratureRule
    series_form: SeriesForm
    omega: float
    a: np.ndarray  # (4,)
    T: np.ndarray  # (4,)
    b: np.ndarray  # (4,)
    R: Optional[np.ndarray]  # (m,), None for odd m
    B: Optional[np.ndarray]  # (m,)
    A: Optional[np.ndarray]  # (4, m)
    C1: np.ndarray
    C2: np.ndarray
    C3: np.ndarray
    C4: np.ndarray
    # Conditional form
    fade_nodes: np.ndarray  # (H,) unit-mean Ricean power gain x_h
    fade_weights: np.ndarray  # (H,) sums to 1
    branch_factors: np.ndarray  # (NB,) Ricean factor of each shadowing branch
    branch_weights: np.ndarray  # (NB,) sums to 1
    t_effective: int
    _mixtures: "OrderedDict[float, GammaMixture]" = field(
        default_factory=OrderedDict, compare=False, repr=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self) -> None:
        _freeze(self.a, self.T, self.b, self.C1, self.C2, self.C3, self.C4)
        _freeze(self.fade_nodes, self.fade_weights, self.branch_factors, self.branch_weights)
        for optional in (self.R, self.B, self.A):
            if optional is not None:
                _freeze(optional)

    @property
    def t_max(self) -> int:
        return self.numerics.t_max

    def cached_mixture(self, gamma_bar: float) -> Optional[GammaMixture]:
        with self._lock:
            return self._mixtures.get(gamma_bar)

    def store_mixture(self, mixture: GammaMixture) -> GammaMixture:
        """Keep at most MIXTURE_CACHE_SIZE γ̄ values, oldest evicted first"""
        with self._lock:
            existing = self._mixtures.get(mixture.gamma_bar)
            if existing is not None:
                return existing
            self._mixtures[mixture.gamma_bar] = mixture
            while len(self._mixtures) > MIXTURE_CACHE_SIZE:
                self._mixtures.popitem(last=False)
            return mixture


@dataclass(frozen=True)
class SnrSampleStream:
    """Seeded instantaneous-SNR draws"""

    seed: int
    stream: int
    gamma_bar: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self.samples)

    @property
    def count(self) -> int:
        return int(self.samples.size)
