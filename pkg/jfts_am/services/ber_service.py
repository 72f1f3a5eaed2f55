"""
BER Service

Instantaneous M-QAM BER on AWGN, BER(γ) ≈ 0.2 exp(-1.6 γ S/((M-1) S̄)),
and its expectation over the JFTS density.

The approximation is applied to BPSK (M = 2) as well. The no-transmission
mode sends no bits, so its BER is 0.
"""

import math
from typing import Union

import numpy as np

from jfts_am.core.exceptions import DomainError, InvalidArgumentError
from jfts_am.core.specfun import regularized_upper_gamma_table
from jfts_am.models.channel import GammaMixture, JftsCoefficients
from jfts_am.models.enums import BerWeighting
from jfts_am.models.plan import PolicyPlan
from jfts_am.schemas.link import LinkBudget
from jfts_am.services import jfts_service

BER_CEILING = 0.2
BER_EXPONENT = 1.6

ArrayLike = Union[float, np.ndarray]


def _check_size(M: float) -> None:
    if not M >= 2:
        raise InvalidArgumentError(f"constellation size must be >= 2, got {M}")


def inst_ber(gamma: ArrayLike, M: float, power_ratio: ArrayLike = 1.0) -> ArrayLike:
    """0.2 exp(-1.6 γ ρ/(M-1)) with ρ = S(γ)/S̄"""
    _check_size(M)
    g = np.asarray(gamma, dtype=float)
    rho = np.asarray(power_ratio, dtype=float)
    if np.any(~(g >= 0.0)) or np.any(~(rho >= 0.0)):
        raise InvalidArgumentError("gamma and power ratio must be >= 0")
    value = BER_CEILING * np.exp(-BER_EXPONENT * g * rho / (M - 1.0))
    return float(value) if value.ndim == 0 else value


def invert_inst_ber(tber: float, M: float, power_ratio: float = 1.0) -> float:
    """γ with inst_ber(γ, M, ρ) = tber; 0 at tber = 0.2"""
    _check_size(M)
    if not power_ratio > 0.0:
        raise InvalidArgumentError(f"power ratio must be > 0, got {power_ratio}")
    if not 0.0 < tber <= BER_CEILING:
        raise DomainError(f"target BER must lie in (0, 0.2], got {tber}")
    if tber == BER_CEILING:
        return 0.0
    return (M - 1.0) * math.log(BER_CEILING / tber) / (BER_EXPONENT * power_ratio)


def kappa(M: float, tber: float) -> float:
    """SNR·power product that pins inst_ber to tber: (M-1) ln(0.2/tber)/1.6"""
    return invert_inst_ber(tber, M, 1.0)


# ============================================================================
# Expected BER tail
# ============================================================================

def mixture_ber_tail(
    mix: GammaMixture,
    gamma_l: np.ndarray,
    M: float,
    power_ratio: float,
) -> np.ndarray:
    """
    ∫_{γ_l}^∞ BER(γ) f(γ) dγ on a gamma mixture.

    With c = 1.6ρ/(M-1) and ξ_h = B_h/γ̄ + c each kernel contributes
    0.2 w (r/ξ)^{t+1} Q(t+1, ξ γ_l).
    """
    rates = mix.scaled_rates
    xi = rates + BER_EXPONENT * power_ratio / (M - 1.0)
    t = np.arange(mix.t_max + 1, dtype=float)
    log_shrink = (t[None, :] + 1.0) * (np.log(rates) - np.log(xi))[:, None]
    eps = mix.weights * np.exp(log_shrink)
    flat = np.asarray(gamma_l, dtype=float).ravel()
    out = np.empty(flat.size)
    for start in range(0, flat.size, 64):
        chunk = flat[start:start + 64]
        table = regularized_upper_gamma_table(mix.t_max, xi[:, None] * chunk[None, :])
        out[start:start + 64] = np.einsum("ht,thg->g", eps, table)
    return BER_CEILING * out.reshape(np.shape(gamma_l))


def expected_ber_tail(
    gamma_l: ArrayLike,
    M: float,
    S: float,
    link: LinkBudget,
    coeffs: JftsCoefficients,
) -> ArrayLike:
    """∫_{γ_l}^∞ BER(γ) f_γ(γ) dγ at constant transmit power S"""
    _check_size(M)
    g = np.asarray(gamma_l, dtype=float)
    if np.any(~(g >= 0.0)):
        raise InvalidArgumentError("gamma_l must be >= 0")
    if not S >= 0.0:
        raise InvalidArgumentError(f"transmit power must be >= 0, got {S}")
    mix = jfts_service.mixture(coeffs, link.gamma_bar)
    value = mixture_ber_tail(mix, g, M, S / link.s_bar)
    return float(value) if value.ndim == 0 else value


# ============================================================================
# Plan-level BER
# ============================================================================

def region_probabilities(plan: PolicyPlan, coeffs: JftsCoefficients) -> np.ndarray:
    """P(γ_l ≤ γ < γ_{l+1}) for each region of the plan"""
    if plan.is_all_off:
        return np.zeros(0)
    mix = jfts_service.mixture(coeffs, plan.link.gamma_bar)
    tails = jfts_service.tail_probability(mix, np.append(plan.boundaries, np.inf))
    return np.clip(tails[:-1] - tails[1:], 0.0, 1.0)


def region_error_mass(plan: PolicyPlan, coeffs: JftsCoefficients) -> np.ndarray:
    """∫_{region l} BER(γ) f(γ) dγ for each region"""
    if plan.is_all_off:
        return np.zeros(0)
    mix = jfts_service.mixture(coeffs, plan.link.gamma_bar)
    s_bar = plan.link.s_bar
    masses = np.empty(len(plan.modes))
    if plan.inversion:
        # S(γ)·γ is constant inside a region, so BER is too
        probs = region_probabilities(plan, coeffs)
        for l, M in enumerate(plan.region_sizes):
            ber = inst_ber(plan.boundaries[l], M, plan.powers[l] / s_bar)
            masses[l] = ber * probs[l]
        return masses
    edges = plan.upper_edges
    for l, M in enumerate(plan.region_sizes):
        tails = mixture_ber_tail(mix, np.array([plan.boundaries[l], edges[l]]), M,
                                 plan.powers[l] / s_bar)
        masses[l] = max(tails[0] - tails[1], 0.0)
    return masses


def average_ber(
    plan: PolicyPlan,
    coeffs: JftsCoefficients,
    weighting: BerWeighting = BerWeighting.BITS,
) -> float:
    """
    Long-run BER of a plan.

    Bit-weighted: Σ p_l ∫BER f / Σ p_l ∫f. Unweighted drops the p_l.
    A plan that never transmits has BER 0.
    """
    if plan.is_all_off:
        return 0.0
    masses = region_error_mass(plan, coeffs)
    probs = region_probabilities(plan, coeffs)
    scale = plan.region_bits if weighting is BerWeighting.BITS else np.ones(len(plan.modes))
    denominator = float(np.dot(scale, probs))
    if denominator <= 0.0:
        return 0.0
    return float(np.dot(scale, masses)) / denominator
