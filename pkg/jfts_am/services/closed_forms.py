"""
Printed Lambert-W closed forms

Lambert-W boundary and power expressions in closed form,
evaluated over the gamma-mixture kernels of the active series form:
A_{i,h}(D_{1t}C_{1i}C_{3i}^t + D_{2t}C_{2i}C_{4i}^t) becomes w t! B_h^{t+1}.

Every value is substituted back into its defining identity. Only values
whose relative residual is within ADOPT_TOL are adopted; failures are
counted as formula mismatches, and Lambert-W arguments below -1/e are
counted as domain errors rather than switching branch.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from jfts_am.core.specfun import lambert_w0_array, lambert_w0_exp, log_factorial
from jfts_am.models.channel import GammaMixture
from jfts_am.models.plan import ClosedFormCheck
from jfts_am.observability.diagnostics import (
    DiagnosticEventType,
    DiagnosticSeverity,
    log_diagnostic_event,
)

ADOPT_TOL = 1e-4
WEIGHT_FLOOR = 1e-14
PRINTED_E = 2.71828  # the printed base, not math.e
_LN_PRINTED_E = math.log(PRINTED_E)
_LN_CEILING = math.log(0.2)


@dataclass(frozen=True)
class _Kernels:
    """Kernels above WEIGHT_FLOOR with ln of their printed amplitude"""

    w: np.ndarray
    B: np.ndarray
    t: np.ndarray
    log_amplitude: np.ndarray  # ln A(D1 C1 C3^t + D2 C2 C4^t), normalized by Z

    @classmethod
    def of(cls, mix: GammaMixture) -> "_Kernels":
        h_idx, t_idx = np.nonzero(mix.weights > WEIGHT_FLOOR)
        w = mix.weights[h_idx, t_idx]
        B = mix.rates[h_idx]
        t = t_idx.astype(float)
        return cls(w=w, B=B, t=t, log_amplitude=np.log(w) + log_factorial(t) + (t + 1.0) * np.log(B))

    def expand(self, start: int) -> tuple[np.ndarray, np.ndarray]:
        """(kernel index, u) pairs for u = start..t"""
        counts = np.maximum(self.t.astype(np.int64) - start + 1, 0)
        kernel = np.repeat(np.arange(self.t.size), counts)
        offsets = np.arange(kernel.size) - np.repeat(np.cumsum(counts) - counts, counts)
        return kernel, (offsets + start).astype(float)


# ============================================================================
# Boundaries
# ============================================================================

def boundary(
    mix: GammaMixture,
    M: float,
    power_ratio: float,
    target: float,
) -> float:
    """
    γ_l = Σ Σ_u (u/ξ̃_h) W[ξ̂_h² (t!(u-1)! target / ε̂)^{1/u}].

    target = TBER for I-BER, TBER - 1/λ for A-BER. The sum
    starts at u = 1 since (u-1)! is undefined at u = 0.
    """
    if not target > 0.0:
        return math.nan
    k = _Kernels.of(mix)
    gamma_bar = mix.gamma_bar
    c = 1.6 * power_ratio / (M - 1.0)
    xi_hat = (k.B + c * gamma_bar) / gamma_bar
    log_eps = _LN_CEILING + np.log(k.w) + log_factorial(k.t) + (k.t + 1.0) * (
        np.log(k.B) - np.log(k.B + c * gamma_bar)
    )
    kernel, u = k.expand(1)
    if kernel.size == 0:
        return 0.0
    log_arg = 2.0 * np.log(xi_hat[kernel]) + (
        log_factorial(k.t[kernel]) + log_factorial(u - 1) + math.log(target) - log_eps[kernel]
    ) / u
    w = lambert_w0_exp(log_arg)
    return float(np.sum(u / (-xi_hat[kernel]) * w))


# ============================================================================
# Powers
# ============================================================================

def _bracket_sum(log_abs_arg: np.ndarray, n: np.ndarray, B: np.ndarray) -> tuple[float, int]:
    """Σ [n W(-e^{log|arg|}) - B] and the number of arguments below -1/e"""
    with np.errstate(over="ignore"):
        arg = -np.exp(log_abs_arg)
    w, domain_errors = lambert_w0_array(arg)
    total = float(np.sum(n * w - B)) if domain_errors == 0 else math.nan
    return total, domain_errors


def crate_power(
    mix: GammaMixture,
    gamma: float,
    tber: float,
    s_bar: float,
) -> tuple[float, int]:
    """S(γ) of the constant-rate, adaptive-power scheme"""
    k = _Kernels.of(mix)
    gamma_bar = mix.gamma_bar
    kernel, u = k.expand(0)
    t = k.t[kernel]
    B = k.B[kernel]
    n = t + 1.0 - u
    log_zeta = (
        log_factorial(t) + log_factorial(u) + math.log(tber) + u * math.log(gamma_bar)
        + (u - t - 1.0) * math.log(s_bar) + B * gamma / gamma_bar - u * math.log(gamma)
        - _LN_CEILING - k.log_amplitude[kernel]
    )
    log_abs_arg = (
        B * gamma / (gamma_bar * n) * _LN_PRINTED_E + math.log(gamma)
        - log_zeta / n - np.log(s_bar * gamma_bar * n)
    )
    total, domain_errors = _bracket_sum(log_abs_arg, n, B)
    return s_bar / (1.6 * gamma_bar) * total, domain_errors


def _arate_bracket(mix: GammaMixture, gamma_l: float, tber: float, s_bar: float) -> tuple[float, int]:
    k = _Kernels.of(mix)
    gamma_bar = mix.gamma_bar
    kernel, u = k.expand(0)
    t = k.t[kernel]
    B = k.B[kernel]
    n = t + 1.0 - u
    log_zeta_hat = (
        log_factorial(t) + log_factorial(u) + math.log(tber) + u * math.log(gamma_bar)
        + (u - t - 1.0) * math.log(s_bar) - _LN_CEILING - k.log_amplitude[kernel]
    )
    log_abs_arg = (
        B * gamma_l / (gamma_bar * n) * _LN_PRINTED_E - log_zeta_hat / n
        - (t + 1.0) * math.log(gamma_l) - np.log(gamma_bar * n)
    )
    return _bracket_sum(log_abs_arg, n, B)


def arate_power(
    mix: GammaMixture,
    M: float,
    gamma_l: float,
    tber: float,
    s_bar: float,
) -> tuple[float, int]:
    """Power at boundary γ_l of the adaptive-rate, adaptive-power scheme"""
    total, domain_errors = _arate_bracket(mix, gamma_l, tber, s_bar)
    return s_bar * (M - 1.0) / (1.6 * mix.gamma_bar) * total, domain_errors


def spacing_lhs(
    mix: GammaMixture,
    M_prev: float,
    M_l: float,
    gamma_l: float,
    tber: float,
    s_bar: float,
) -> tuple[float, int]:
    """Spacing left-hand side, to be compared with (p_l - p_{l-1})/λ"""
    total, domain_errors = _arate_bracket(mix, gamma_l, tber, s_bar)
    return s_bar * (M_prev - M_l) / (1.6 * mix.gamma_bar) * total, domain_errors


# ============================================================================
# Back-substitution
# ============================================================================

def back_substitute(
    equation: str,
    region: int,
    value: float,
    residual_of: Callable[[float], float],
    domain_errors: int = 0,
) -> ClosedFormCheck:
    """Relative residual of a printed value in its defining identity"""
    residual = math.inf
    if math.isfinite(value) and domain_errors == 0:
        try:
            residual = float(residual_of(value))
        except ValueError:
            residual = math.inf
        if not math.isfinite(residual):
            residual = math.inf
    adopted = residual <= ADOPT_TOL

    if domain_errors:
        log_diagnostic_event(
            DiagnosticEventType.LAMBERT_W_DOMAIN,
            DiagnosticSeverity.WARNING,
            "Lambert-W argument below -1/e in printed closed form",
            source=equation,
            count=domain_errors,
            additional_data={"region": region},
        )
    if not adopted:
        log_diagnostic_event(
            DiagnosticEventType.FORMULA_MISMATCH,
            DiagnosticSeverity.WARNING,
            "Printed closed form fails its defining identity",
            source=equation,
            additional_data={"region": region, "value": value, "residual": residual},
        )
    return ClosedFormCheck(
        equation=equation,
        region=region,
        value=float(value),
        residual=residual,
        adopted=adopted,
        domain_errors=domain_errors,
    )
