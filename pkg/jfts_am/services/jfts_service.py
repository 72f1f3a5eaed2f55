"""
JFTS Channel Service

Parameterization, series precompute, the SNR density and its closed-form
integrals, plus an independent Ricean x TWDP sampler.

Both series forms reduce to a GammaMixture:
    f(γ) = Σ_h Σ_t w[h, t] · Gamma(γ; t+1, B_h/γ̄)
so every probability below is a finite sum of regularized upper incomplete
gammas Q(t+1, B_h x/γ̄).
"""

import math
import time
import warnings
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from pydantic import ValidationError
from scipy.special import exp1, logsumexp
from scipy.stats import poisson

from jfts_am.core.exceptions import (
    InvalidArgumentError,
    NumericalOverflowError,
    TruncationWarning,
    invalid_argument_from,
)
from jfts_am.core.specfun import (
    bessel_i0,
    hermite_rule,
    log_factorial,
    regularized_upper_gamma_table,
)
from jfts_am.models.channel import GammaMixture, JftsCoefficients, QuadratureRule, SnrSampleStream
from jfts_am.models.enums import PhaseRule, SeriesForm
from jfts_am.observability import metrics
from jfts_am.observability.diagnostics import (
    DiagnosticEventType,
    DiagnosticSeverity,
    log_diagnostic_event,
)
from jfts_am.observability.logging import get_logger
from jfts_am.schemas.channel import JftsParams, NumericsConfig

logger = get_logger()

# Eight-phase closed Newton-Cotes weights on [0, π], folded into four pairs
NEWTON_COTES_A = np.array([751.0, 3577.0, 1323.0, 2989.0]) / 17280.0

TRUNCATION_PROBE = 5.0  # check the t = T term at γ = 5γ̄
TRUNCATION_RATIO = 1e-12
SAMPLE_CHUNK = 1 << 20
_CHUNK = 64

ArrayLike = Union[float, np.ndarray]


# ============================================================================
# Parameterization
# ============================================================================

def params_from_db(
    K_dB: float,
    Sh_dB: float,
    delta: float,
    P1: Optional[float] = None,
    P2: Optional[float] = None,
) -> JftsParams:
    """K = 10^{K_dB/10}, S_h = 10^{Sh_dB/10}; P1, P2 default to Ω = 1"""
    try:
        return JftsParams.from_db(K_dB, Sh_dB, delta, P1=P1, P2=P2)
    except ValidationError as exc:
        raise invalid_argument_from(exc) from exc


# ============================================================================
# Precompute
# ============================================================================

def _fade_nodes(rule: QuadratureRule, K: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Unit-mean Ricean power gain X = |√K + u + jv|²/(1+K), u, v ~ N(0, 1/2),
    on a product Gauss-Hermite grid folded over v → -v.
    """
    nodes = rule.nodes
    probs = rule.weights / math.sqrt(math.pi)
    keep = nodes >= 0.0
    v = nodes[keep]
    v_probs = np.where(v > 0.0, 2.0 * probs[keep], probs[keep])

    x = ((math.sqrt(K) + nodes[:, None]) ** 2 + v[None, :] ** 2) / (1.0 + K)
    omega = probs[:, None] * v_probs[None, :]
    x = np.maximum(x.ravel(), np.finfo(float).tiny)
    omega = omega.ravel()
    return x, omega / omega.sum()


def _shadow_branches(params: JftsParams, cfg: NumericsConfig) -> tuple[np.ndarray, np.ndarray]:
    """Ricean factor S_h(1 + Δ cos φ) of the shadowing power at each phase node"""
    if cfg.phase_rule is PhaseRule.NEWTON_COTES:
        T = np.cos(np.arange(4) * np.pi / 7.0)
        cosines = np.concatenate([T, -T])
        weights = np.concatenate([NEWTON_COTES_A, NEWTON_COTES_A])
    else:
        n = cfg.phase_order
        cosines = np.cos((np.arange(n) + 0.5) * np.pi / n)
        weights = np.full(n, 1.0 / n)
    factors = params.S_h * (1.0 + params.delta * cosines)
    return np.maximum(factors, 0.0), weights / weights.sum()


def _poisson_mix_log(t: np.ndarray, factors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """ln Σ_b α_b Pois(t; K_b)"""
    log_pmf = poisson.logpmf(t[None, :], factors[:, None])
    return logsumexp(log_pmf + np.log(weights)[:, None], axis=0)


def _kernel_log_density(t: np.ndarray, rates: np.ndarray, x: float) -> np.ndarray:
    """ln Gamma(x; t+1, rates) for a (H,) rate vector and (T,) shapes"""
    r = rates[:, None]
    return (t + 1.0) * np.log(r) + t * math.log(x) - r * x - log_factorial(t)


def _last_term_fraction(log_w: np.ndarray, rates: np.ndarray) -> float:
    """Share of the t = T terms in the (unit γ̄) density at γ = 5"""
    t = np.arange(log_w.shape[1], dtype=float)
    log_terms = log_w + _kernel_log_density(t, rates, TRUNCATION_PROBE)
    total = logsumexp(log_terms)
    if not np.isfinite(total):
        return 0.0
    return float(np.exp(logsumexp(log_terms[:, -1]) - total))


def _conditional_truncation(
    fade_x: np.ndarray,
    fade_w: np.ndarray,
    factors: np.ndarray,
    branch_w: np.ndarray,
    params: JftsParams,
    cfg: NumericsConfig,
) -> tuple[int, float]:
    k_max = float(factors.max())
    t_eff = cfg.t_max
    if k_max > 0.0:
        t_eff = max(t_eff, int(poisson.isf(cfg.truncation_tail, k_max)) + 1)
    t_eff = min(t_eff, cfg.t_cap)

    rates = (1.0 + params.S_h) / fade_x
    with np.errstate(divide="ignore"):
        log_fade = np.log(fade_w)
    while True:
        t = np.arange(t_eff + 1, dtype=float)
        log_w = log_fade[:, None] + _poisson_mix_log(t, factors, branch_w)[None, :]
        fraction = _last_term_fraction(log_w, rates)
        if fraction < TRUNCATION_RATIO or t_eff >= cfg.t_cap:
            return t_eff, fraction
        t_eff = min(cfg.t_cap, t_eff + max(8, t_eff // 4))


def _report_truncation(fraction: float, t_eff: int, source: str) -> None:
    if fraction < TRUNCATION_RATIO:
        return
    message = f"t = {t_eff} term carries {fraction:.3e} of the density at γ = 5γ̄"
    log_diagnostic_event(
        DiagnosticEventType.TRUNCATION,
        DiagnosticSeverity.WARNING,
        "Series truncation check failed",
        source=source,
        additional_data={"t_max": t_eff, "fraction": fraction},
    )
    warnings.warn(message, TruncationWarning, stacklevel=3)


def precompute(params: JftsParams, cfg: Optional[NumericsConfig] = None) -> JftsCoefficients:
    """
    Fill the series tables for one channel.

    The printed-definition tables (A, B, C, R, T, b) need an even m; with odd m
    they are left empty and only the conditional form is available.
    """
    cfg = cfg or NumericsConfig()
    started = time.perf_counter()
    rule = hermite_rule(cfg.m)

    K, S_h, delta = params.K, params.S_h, params.delta
    P1, P2, omega = params.P1, params.P2, params.omega
    T = np.cos(np.arange(4) * np.pi / 7.0)
    a = NEWTON_COTES_A.copy()
    b = a * bessel_i0(1.0)

    with np.errstate(over="ignore"):
        C1 = np.exp(S_h * delta * T)
        C2 = np.exp(-S_h * delta * T)
        C3 = K * S_h * (1.0 - delta * T) * omega / (P1 * P2)
        C4 = K * S_h * (1.0 + delta * T) * omega / (P1 * P2)

        R = B = A = None
        if cfg.m % 2 == 0:
            r = rule.nodes
            R = rule.weights / np.abs(r) * np.exp(r ** 2 - r ** 2 / (2.0 * P1))
            B = omega / (2.0 * P2 * r ** 2)
            A = b[:, None] * R[None, :] * omega / (P1 * P2) * math.exp(-K - S_h)

    fade_x, fade_w = _fade_nodes(rule, K)
    factors, branch_w = _shadow_branches(params, cfg)
    t_eff, fraction = _conditional_truncation(fade_x, fade_w, factors, branch_w, params, cfg)
    if cfg.series_form is SeriesForm.CONDITIONAL:
        _report_truncation(fraction, t_eff, "conditional")

    coeffs = JftsCoefficients(
        params=params,
        numerics=cfg,
        rule=rule,
        series_form=cfg.series_form,
        omega=omega,
        a=a,
        T=T,
        b=b,
        R=R,
        B=B,
        A=A,
        C1=C1,
        C2=C2,
        C3=C3,
        C4=C4,
        fade_nodes=fade_x,
        fade_weights=fade_w,
        branch_factors=factors,
        branch_weights=branch_w,
        t_effective=t_eff,
    )
    logger.info(
        "JFTS coefficients precomputed",
        series_form=cfg.series_form.value,
        m=cfg.m,
        t_effective=t_eff if cfg.series_form is SeriesForm.CONDITIONAL else cfg.t_max,
        omega=omega,
        seconds=round(time.perf_counter() - started, 4),
    )
    return coeffs


@lru_cache(maxsize=64)
def get_coefficients(params: JftsParams, cfg: NumericsConfig) -> JftsCoefficients:
    """Memoized precompute, keyed on the (hashable) frozen inputs"""
    return precompute(params, cfg)


def printed_log_d(coeffs: JftsCoefficients, gamma_bar: float) -> tuple[np.ndarray, np.ndarray]:
    """
    ln D_{1t}, ln D_{2t} exactly as printed, shape (4, m, t_max+1).

    D depends on γ̄ and on A_{i,h}, so it lives per γ̄ rather than on the
    coefficient object.
    """
    if coeffs.A is None or coeffs.B is None:
        raise InvalidArgumentError("printed tables need an even quadrature order")
    _check_gamma_bar(gamma_bar)
    t = np.arange(coeffs.t_max + 1, dtype=float)
    log_su = _printed_log_su(coeffs.B, gamma_bar, coeffs.t_max)
    with np.errstate(divide="ignore"):
        log_a = np.log(coeffs.A)[:, :, None]
        base = math.log(gamma_bar) + 2.0 * log_factorial(t) - log_a + log_su[None, :, None]
        log_d1 = base + t * (math.log(gamma_bar) - np.log(coeffs.C3))[:, None, None]
        log_d2 = base + t * (math.log(gamma_bar) - np.log(coeffs.C4))[:, None, None]
    return log_d1, log_d2


def _printed_log_su(B: np.ndarray, gamma_bar: float, t_max: int) -> np.ndarray:
    """ln Σ_{u=1}^{t_max+1} (u-1)! (γ̄/B_h)^u"""
    u = np.arange(1, t_max + 2, dtype=float)
    log_ratio = np.log(gamma_bar / B)
    return logsumexp(log_factorial(u - 1)[None, :] + u[None, :] * log_ratio[:, None], axis=1)


# ============================================================================
# Gamma mixtures
# ============================================================================

def _check_gamma_bar(gamma_bar: float) -> None:
    if not (gamma_bar > 0.0 and math.isfinite(gamma_bar)):
        raise InvalidArgumentError(f"average SNR must be positive and finite, got {gamma_bar}")


def _conditional_mixture(coeffs: JftsCoefficients, gamma_bar: float) -> GammaMixture:
    t = np.arange(coeffs.t_effective + 1, dtype=float)
    log_pi = _poisson_mix_log(t, coeffs.branch_factors, coeffs.branch_weights)
    weights = coeffs.fade_weights[:, None] * np.exp(log_pi)[None, :]
    total = float(weights.sum())
    rates = (1.0 + coeffs.params.S_h) / coeffs.fade_nodes
    return GammaMixture(
        gamma_bar=gamma_bar,
        weights=weights / total,
        rates=rates,
        log_normalization=math.log(total),
        series_form=SeriesForm.CONDITIONAL,
    )


def _printed_mixture(coeffs: JftsCoefficients, gamma_bar: float) -> GammaMixture:
    """
    The series as printed. A·D_{1t}·C_{3i}^t collapses to γ̄^{t+1}(t!)² S_u(h),
    so the (i, h, t) weight is (C_{1i}+C_{2i}) t! (γ̄/B_h)^{t+1} S_u(h).
    """
    if coeffs.B is None:
        raise InvalidArgumentError("printed series form needs an even quadrature order")
    t_max = coeffs.t_max
    t = np.arange(t_max + 1, dtype=float)
    S_h, delta = coeffs.params.S_h, coeffs.params.delta
    log_c = np.logaddexp(S_h * delta * coeffs.T, -S_h * delta * coeffs.T)  # ln(C1 + C2)
    log_ratio = np.log(gamma_bar / coeffs.B)
    log_su = _printed_log_su(coeffs.B, gamma_bar, t_max)
    log_w = (
        log_c[:, None, None]
        + log_su[None, :, None]
        + log_factorial(t)[None, None, :]
        + (t + 1.0)[None, None, :] * log_ratio[None, :, None]
    )
    bad = ~np.isfinite(log_w)
    if np.any(bad):
        index = tuple(int(v) + (1 if k < 2 else 0) for k, v in enumerate(np.argwhere(bad)[0]))
        raise NumericalOverflowError("printed series term is not finite", index=index)

    log_w_ht = logsumexp(log_w, axis=0)
    log_z = float(logsumexp(log_w_ht))
    # γ̄ only scales every kernel at γ = 5γ̄ by the same factor
    _report_truncation(_last_term_fraction(log_w_ht, coeffs.B), t_max, "printed")
    return GammaMixture(
        gamma_bar=gamma_bar,
        weights=np.exp(log_w_ht - log_z),
        rates=coeffs.B.copy(),
        log_normalization=log_z,
        series_form=SeriesForm.PRINTED,
    )


def mixture(coeffs: JftsCoefficients, gamma_bar: float) -> GammaMixture:
    """Normalized gamma mixture at γ̄ (cached on the coefficients)"""
    _check_gamma_bar(gamma_bar)
    gamma_bar = float(gamma_bar)
    cached = coeffs.cached_mixture(gamma_bar)
    if cached is not None:
        return cached

    if coeffs.series_form is SeriesForm.PRINTED:
        built = _printed_mixture(coeffs, gamma_bar)
    else:
        built = _conditional_mixture(coeffs, gamma_bar)

    drift = abs(math.expm1(built.log_normalization)) if built.log_normalization < 700 else math.inf
    if drift > coeffs.numerics.norm_tol:
        log_diagnostic_event(
            DiagnosticEventType.NORMALIZATION_DRIFT,
            DiagnosticSeverity.WARNING,
            "Series normalization differs from 1",
            source=built.series_form.value,
            additional_data={"gamma_bar": gamma_bar, "log_z": built.log_normalization},
        )
    else:
        logger.debug("Series normalization", log_z=built.log_normalization, gamma_bar=gamma_bar)
    return coeffs.store_mixture(built)


# ============================================================================
# Density and closed-form integrals
# ============================================================================

def _as_nonnegative(values: ArrayLike, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if np.any(np.isnan(array)) or np.any(array < 0.0):
        raise InvalidArgumentError(f"{name} must be >= 0")
    return array


def _chunks(flat: np.ndarray):
    for start in range(0, flat.size, _CHUNK):
        yield slice(start, start + _CHUNK)


def mixture_pdf(mix: GammaMixture, gamma: np.ndarray) -> np.ndarray:
    w, r, t = mix.active_kernels
    base = np.log(w) + (t + 1.0) * np.log(r) - log_factorial(t)
    flat = gamma.ravel()
    out = np.empty(flat.size)
    for chunk in _chunks(flat):
        g = flat[chunk][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            power = np.where(t == 0.0, 0.0, t * np.log(g))
        out[chunk] = np.exp(base + power - r * g).sum(axis=1)
    return out.reshape(gamma.shape)


def tail_probability(mix: GammaMixture, x: np.ndarray) -> np.ndarray:
    """P(γ ≥ x) = Σ w Q(t+1, B_h x/γ̄)"""
    rates = mix.scaled_rates
    flat = np.asarray(x, dtype=float).ravel()
    out = np.empty(flat.size)
    for chunk in _chunks(flat):
        table = regularized_upper_gamma_table(mix.t_max, rates[:, None] * flat[chunk][None, :])
        out[chunk] = np.einsum("ht,thg->g", mix.weights, table)
    return np.clip(out, 0.0, 1.0).reshape(np.shape(x))


def inverse_tail(mix: GammaMixture, x: np.ndarray) -> np.ndarray:
    """
    ∫_x^∞ f(γ)/γ dγ.

    Kernel t ≥ 1 gives (r/t) Q(t, r x); the t = 0 kernel gives r E1(r x).
    """
    rates = mix.scaled_rates
    t = np.arange(1, mix.t_max + 1, dtype=float)
    flat = np.asarray(x, dtype=float).ravel()
    out = np.empty(flat.size)
    for chunk in _chunks(flat):
        args = rates[:, None] * flat[chunk][None, :]
        with np.errstate(invalid="ignore"):
            head = np.einsum("h,h,hg->g", mix.weights[:, 0], rates, exp1(args))
        if mix.t_max >= 1:
            table = regularized_upper_gamma_table(mix.t_max - 1, args)
            scaled = mix.weights[:, 1:] * rates[:, None] / t[None, :]
            head = head + np.einsum("ht,thg->g", scaled, table)
        out[chunk] = head
    return out.reshape(np.shape(x))


def _scalar_or_array(result: np.ndarray, original: ArrayLike) -> ArrayLike:
    return float(result) if np.ndim(original) == 0 else result


def pdf(gamma: ArrayLike, gamma_bar: float, coeffs: JftsCoefficients) -> ArrayLike:
    """f_γ(γ) of the configured series form, divided by Z"""
    values = _as_nonnegative(gamma, "gamma")
    mix = mixture(coeffs, gamma_bar)
    return _scalar_or_array(mixture_pdf(mix, values), gamma)


def cdf(gamma: ArrayLike, gamma_bar: float, coeffs: JftsCoefficients) -> ArrayLike:
    values = _as_nonnegative(gamma, "gamma")
    mix = mixture(coeffs, gamma_bar)
    return _scalar_or_array(1.0 - tail_probability(mix, values), gamma)


def interval_probability(a: float, b: float, gamma_bar: float, coeffs: JftsCoefficients) -> float:
    """P(a ≤ γ < b), closed form; b may be +inf"""
    if math.isnan(a) or math.isnan(b) or a < 0.0:
        raise InvalidArgumentError(f"interval bounds must satisfy 0 <= a <= b, got ({a}, {b})")
    if a > b:
        raise InvalidArgumentError(f"interval lower bound {a} exceeds upper bound {b}")
    if a == b:
        return 0.0
    mix = mixture(coeffs, gamma_bar)
    tails = tail_probability(mix, np.array([a, b]))
    return float(min(max(tails[0] - tails[1], 0.0), 1.0))


def inverse_moment(a: float, b: float, gamma_bar: float, coeffs: JftsCoefficients) -> float:
    """∫_a^b f(γ)/γ dγ; infinite at a = 0 when the t = 0 kernels carry weight"""
    if math.isnan(a) or math.isnan(b) or a < 0.0 or a > b:
        raise InvalidArgumentError(f"interval bounds must satisfy 0 <= a <= b, got ({a}, {b})")
    if a == b:
        return 0.0
    mix = mixture(coeffs, gamma_bar)
    if a == 0.0 and np.any(mix.weights[:, 0] > 0.0):
        return math.inf
    values = inverse_tail(mix, np.array([a, b]))
    upper = 0.0 if math.isinf(b) else float(values[1])
    return max(float(values[0]) - upper, 0.0)


def mean_snr(gamma_bar: float, coeffs: JftsCoefficients) -> float:
    """E[γ] of the normalized series"""
    mix = mixture(coeffs, gamma_bar)
    return float(np.sum(mix.weights * mix.shapes[None, :] / mix.scaled_rates[:, None]))


# ============================================================================
# Sampler
# ============================================================================

def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, keys...)"""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(keys)))


def _draw_gains(rng: np.random.Generator, params: JftsParams, n: int) -> np.ndarray:
    normals = rng.standard_normal((4, n)) * math.sqrt(0.5)
    phases = rng.uniform(0.0, 2.0 * math.pi, (2, n))

    # Ricean, unit mean: specular √(K/(1+K)), diffuse power 1/(1+K)
    los = math.sqrt(params.K / (1.0 + params.K))
    scatter = math.sqrt(1.0 / (1.0 + params.K))
    fade = (los + scatter * normals[0]) ** 2 + (scatter * normals[1]) ** 2

    # TWDP, unit mean: V1² + V2² = S_h/(1+S_h), 2V1V2 = Δ(V1² + V2²)
    specular = params.S_h / (1.0 + params.S_h)
    plus = math.sqrt(specular * (1.0 + params.delta))
    minus = math.sqrt(specular * (1.0 - params.delta))
    v1, v2 = 0.5 * (plus + minus), 0.5 * (plus - minus)
    diffuse = math.sqrt(1.0 / (1.0 + params.S_h))
    real = v1 * np.cos(phases[0]) + v2 * np.cos(phases[1]) + diffuse * normals[2]
    imag = v1 * np.sin(phases[0]) + v2 * np.sin(phases[1]) + diffuse * normals[3]
    return fade * (real * real + imag * imag)


def sample_gains(params: JftsParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean composite power gains G_fade · G_shad"""
    out = np.empty(count)
    for start in range(0, count, SAMPLE_CHUNK):
        stop = min(count, start + SAMPLE_CHUNK)
        out[start:stop] = _draw_gains(rng, params, stop - start)
    return out


def sample_snr(
    params: JftsParams,
    gamma_bar: float,
    count: int,
    seed: int,
    stream: int = 0,
) -> SnrSampleStream:
    """
    γ_j = γ̄ · G_fade · G_shad. Both gains have unit mean by construction,
    so E[G_fade · G_shad] = 1 and no further scaling is applied.
    """
    _check_gamma_bar(gamma_bar)
    if isinstance(count, bool) or int(count) != count or count < 1:
        raise InvalidArgumentError(f"sample count must be a positive integer, got {count}")
    rng = substream(seed, stream)
    samples = gamma_bar * sample_gains(params, int(count), rng)
    metrics.mc_samples_total.inc(int(count))
    logger.debug("SNR samples drawn", count=int(count), seed=seed, stream=stream)
    return SnrSampleStream(seed=int(seed), stream=int(stream), gamma_bar=float(gamma_bar),
                           samples=samples)


def ks_distance(
    samples: np.ndarray,
    gamma_bar: float,
    coeffs: JftsCoefficients,
    points: int = 2000,
) -> float:
    """
    Kolmogorov-Smirnov distance between samples and the analytic CDF.

    The CDF is evaluated at `points` evenly spaced order statistics; with both
    CDFs monotone this is the supremum to within about 1/points.
    """
    ordered = np.sort(np.asarray(samples, dtype=float))
    n = ordered.size
    if n == 0:
        raise InvalidArgumentError("KS distance needs at least one sample")
    idx = np.unique(np.linspace(0, n - 1, min(points, n)).astype(np.int64))
    F = np.asarray(cdf(ordered[idx], gamma_bar, coeffs))
    upper = (idx + 1) / n - F
    lower = F - idx / n
    return float(max(upper.max(), lower.max()))
