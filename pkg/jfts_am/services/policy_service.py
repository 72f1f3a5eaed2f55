"""
Policy Solvers

The four adaptation policies, each producing a PolicyPlan whose defining
constraints are re-checked before it is returned:

- ARATE_CPOW_IBER: constant power S = S̄/P(γ ≥ γ₀), boundaries pin the BER
  at every used SNR to TBER.
- ARATE_CPOW_ABER: same structure at threshold τ = TBER - 1/λ; λ bisected so
  the bit-weighted average BER equals TBER.
- CRATE_APOW_IBER: largest constellation only, S(γ) = κ S̄/γ above γ₀,
  γ₀ from the average-power constraint.
- ARATE_APOW_IBER: S_l(γ) = κ_l S̄/γ in region l, boundaries spaced by the
  Kuhn-Tucker condition S_l(γ_l) - S_{l-1}(γ_l) = (p_l - p_{l-1})/λ.

κ_l = (M_l - 1) ln(0.2/TBER)/1.6 throughout.
"""

import math
import time
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from jfts_am.core.config import settings
from jfts_am.core.exceptions import (
    ConvergenceError,
    InfeasiblePlanError,
    InvalidArgumentError,
)
from jfts_am.models.channel import GammaMixture, JftsCoefficients
from jfts_am.models.enums import BerWeighting, IberReading, PolicyKind
from jfts_am.models.plan import ClosedFormCheck, PlanDiagnostics, PolicyPlan
from jfts_am.observability import metrics
from jfts_am.observability.diagnostics import (
    DiagnosticEventType,
    DiagnosticSeverity,
    log_diagnostic_event,
)
from jfts_am.observability.logging import get_logger
from jfts_am.schemas.channel import JftsParams, NumericsConfig
from jfts_am.schemas.link import LinkBudget, ModulationSet
from jfts_am.schemas.results import PlanDocument
from jfts_am.services import ber_service, closed_forms, jfts_service

logger = get_logger()

MAX_ITERATIONS = 200
FIXED_POINT_TOL = 1e-8
POWER_TOL = 1e-6
BOUNDARY_TOL = 1e-4
ABER_TOL = 1e-3
CRATE_POWER_TOL = 1e-4
APOW_POWER_TOL = 1e-3
LAMBDA_REL_TOL = 1e-10
MAX_EXPANSIONS = 12


@dataclass(frozen=True)
class SolveContext:
    """Inputs shared by every solver"""

    link: LinkBudget
    mods: ModulationSet
    coeffs: JftsCoefficients
    mix: GammaMixture
    reading: IberReading
    check_closed_forms: bool

    @property
    def active(self) -> tuple[int, ...]:
        return self.mods.active_indices

    def sizes(self, indices: tuple[int, ...]) -> np.ndarray:
        return np.array([self.mods.sizes[i] for i in indices], dtype=float)

    def bits(self, indices: tuple[int, ...]) -> np.ndarray:
        return np.array([self.mods.bits[i] for i in indices], dtype=float)

    def tail(self, x: float) -> float:
        return float(jfts_service.tail_probability(self.mix, np.array(x)))

    def density(self, x: float) -> float:
        return float(jfts_service.mixture_pdf(self.mix, np.array(x)))


def make_context(
    link: LinkBudget,
    mods: Optional[ModulationSet],
    params: JftsParams,
    cfg: Optional[NumericsConfig] = None,
    coeffs: Optional[JftsCoefficients] = None,
    reading: IberReading = IberReading.INSTANTANEOUS,
    check_closed_forms: Optional[bool] = None,
) -> SolveContext:
    if not isinstance(link, LinkBudget):
        raise InvalidArgumentError("link must be a LinkBudget")
    mods = mods or ModulationSet()
    cfg = cfg or NumericsConfig()
    if coeffs is None:
        coeffs = jfts_service.get_coefficients(params, cfg)
    return SolveContext(
        link=link,
        mods=mods,
        coeffs=coeffs,
        mix=jfts_service.mixture(coeffs, link.gamma_bar),
        reading=reading,
        check_closed_forms=settings.CLOSED_FORM_CHECK if check_closed_forms is None
        else check_closed_forms,
    )


def _kappas(ctx: SolveContext, indices: tuple[int, ...], threshold: float) -> np.ndarray:
    return np.array([ber_service.kappa(M, threshold) for M in ctx.sizes(indices)])


def _compact(
    boundaries: np.ndarray, modes: tuple[int, ...], powers: np.ndarray
) -> tuple[np.ndarray, tuple[int, ...], np.ndarray]:
    """Drop empty regions; among equal boundaries the highest mode wins"""
    keep = np.append(np.diff(boundaries) > 0.0, True)
    return boundaries[keep], tuple(m for m, k in zip(modes, keep) if k), powers[keep]


def all_off_plan(
    kind: PolicyKind,
    link: LinkBudget,
    mods: Optional[ModulationSet] = None,
    reason: str = "",
) -> PolicyPlan:
    """Plan that never transmits (cutoff +inf, ASE 0)"""
    diagnostics = PlanDiagnostics(infeasible_reason=reason or None)
    return PolicyPlan(
        kind=kind,
        modulation=mods or ModulationSet(),
        link=link,
        boundaries=np.zeros(0),
        modes=(),
        powers=np.zeros(0),
        inversion=kind.inverts_channel,
        diagnostics=diagnostics,
    )


# ============================================================================
# Constant power, adaptive rate
# ============================================================================

def _cutoff_fixed_point(ctx: SolveContext, kappa_1: float) -> tuple[float, int]:
    """
    γ₀ = κ₁ P(γ ≥ γ₀), i.e. the BER identity at γ₀ with S = S̄/P(γ ≥ γ₀).

    Newton-damped fixed-point iteration from γ₀ = κ₁; the derivative of
    γ - κ₁P(γ ≥ γ) is 1 + κ₁f(γ) ≥ 1.
    """
    gamma0 = kappa_1
    if kappa_1 == 0.0:
        return 0.0, 0
    residual = gamma0 - kappa_1 * ctx.tail(gamma0)
    for iteration in range(1, MAX_ITERATIONS + 1):
        step = residual / (1.0 + kappa_1 * ctx.density(gamma0))
        candidate = max(gamma0 - step, 0.0)
        candidate_residual = candidate - kappa_1 * ctx.tail(candidate)
        halvings = 0
        while abs(candidate_residual) > abs(residual) and halvings < 30:
            step *= 0.5
            candidate = max(gamma0 - step, 0.0)
            candidate_residual = candidate - kappa_1 * ctx.tail(candidate)
            halvings += 1
        moved = abs(candidate - gamma0)
        gamma0, residual = candidate, candidate_residual
        if moved <= FIXED_POINT_TOL * max(gamma0, np.finfo(float).tiny):
            return gamma0, iteration
    raise ConvergenceError(
        "cutoff fixed point did not converge",
        iterations=MAX_ITERATIONS,
        residual=abs(residual) / max(gamma0, np.finfo(float).tiny),
    )


def _tail_boundary(ctx: SolveContext, M: float, S: float, threshold: float) -> float:
    """γ with expected_ber_tail(γ, M, S) = threshold, 0 if already below"""
    rho = S / ctx.link.s_bar

    def tail_ber(x: float) -> float:
        return float(ber_service.mixture_ber_tail(ctx.mix, np.array(x), M, rho))

    if tail_ber(0.0) <= threshold:
        return 0.0
    lo, hi = 0.0, max(ber_service.kappa(M, threshold) / max(rho, 1e-300), ctx.link.gamma_bar)
    while tail_ber(hi) > threshold:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise InfeasiblePlanError("tail BER never reaches the target", mode=int(M))
    for _ in range(MAX_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if tail_ber(mid) > threshold:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def _cpow_tail_reading(
    ctx: SolveContext, threshold: float
) -> tuple[float, float, np.ndarray, int]:
    """γ₀ = boundary₁(S̄/P(γ ≥ γ₀)) by bisection; the map is decreasing in γ₀"""
    sizes = ctx.sizes(ctx.active)

    def first_boundary(gamma0: float) -> float:
        P = ctx.tail(gamma0)
        if P <= 0.0:
            return 0.0
        return _tail_boundary(ctx, sizes[0], ctx.link.s_bar / P, threshold)

    lo, hi = 0.0, first_boundary(0.0)
    iterations = 0
    while hi - lo > FIXED_POINT_TOL * max(hi, np.finfo(float).tiny) and iterations < MAX_ITERATIONS:
        iterations += 1
        mid = 0.5 * (lo + hi)
        if mid - first_boundary(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    gamma0 = 0.5 * (lo + hi)
    P = ctx.tail(gamma0)
    if P <= 0.0:
        raise InfeasiblePlanError("no SNR mass above the cutoff", mode=int(sizes[0]))
    S = ctx.link.s_bar / P
    boundaries = np.array([gamma0] + [_tail_boundary(ctx, M, S, threshold) for M in sizes[1:]])
    boundaries = np.maximum.accumulate(boundaries)
    return gamma0, S, boundaries, iterations


def _cpow_plan(
    ctx: SolveContext,
    kind: PolicyKind,
    threshold: float,
    lam: Optional[float] = None,
) -> PolicyPlan:
    """Constant-power plan whose boundaries pin the BER identity at `threshold`"""
    active = ctx.active
    sizes = ctx.sizes(active)
    s_bar = ctx.link.s_bar
    diagnostics = PlanDiagnostics()

    if ctx.reading is IberReading.TAIL:
        gamma0, S, boundaries, iterations = _cpow_tail_reading(ctx, threshold)
    else:
        kappas = _kappas(ctx, active, threshold)
        gamma0, iterations = _cutoff_fixed_point(ctx, float(kappas[0]))
        P = ctx.tail(gamma0)
        if P <= 0.0:
            raise InfeasiblePlanError(
                "average power cannot be met: no SNR mass above the cutoff",
                kind=kind.value,
                mode=int(sizes[0]),
            )
        S = s_bar / P
        boundaries = kappas * s_bar / S
        boundaries[0] = gamma0
    diagnostics.iterations = iterations

    boundaries, modes, powers = _compact(boundaries, active, np.full(len(active), S))
    plan = PolicyPlan(
        kind=kind,
        modulation=ctx.mods,
        link=ctx.link,
        boundaries=boundaries,
        modes=modes,
        powers=powers,
        inversion=False,
        lam=lam,
        reading=ctx.reading,
        diagnostics=diagnostics,
    )
    _record_cpow_residuals(ctx, plan, threshold)
    return plan


def _identity_residual(ctx: SolveContext, plan: PolicyPlan, l: int, threshold: float) -> float:
    M = plan.region_sizes[l]
    gamma_l = float(plan.boundaries[l])
    S = float(plan.powers[l])
    if plan.reading is IberReading.TAIL and not plan.inversion:
        value = ber_service.mixture_ber_tail(ctx.mix, np.array(gamma_l), M, S / ctx.link.s_bar)
        if gamma_l == 0.0 and value <= threshold:
            return 0.0
    else:
        value = ber_service.inst_ber(gamma_l, M, S / ctx.link.s_bar)
    return abs(float(value) - threshold) / threshold


def _record_cpow_residuals(ctx: SolveContext, plan: PolicyPlan, threshold: float) -> None:
    d = plan.diagnostics
    S = float(plan.powers[0])
    d.residuals["average_power"] = abs(S * ctx.tail(plan.cutoff) - ctx.link.s_bar) / ctx.link.s_bar
    d.residuals["boundary_ber"] = max(
        _identity_residual(ctx, plan, l, threshold) for l in range(len(plan.modes))
    )
    d.tail_ber = [
        float(ber_service.mixture_ber_tail(ctx.mix, np.array(g), M, S / ctx.link.s_bar))
        for g, M in zip(plan.boundaries, plan.region_sizes)
    ]


def _check_cpow_closed_forms(
    ctx: SolveContext, plan: PolicyPlan, threshold: float, equation: str
) -> PolicyPlan:
    """Lambert-W boundaries per region; adopt passing values if the plan still closes"""
    S = float(plan.powers[0])
    rho = S / ctx.link.s_bar
    checks: list[ClosedFormCheck] = []
    for l, M in enumerate(plan.region_sizes):
        value = closed_forms.boundary(ctx.mix, M, rho, threshold)

        def residual_of(gamma_l: float, M: float = M) -> float:
            if plan.reading is IberReading.TAIL:
                got = ber_service.mixture_ber_tail(ctx.mix, np.array(gamma_l), M, rho)
            else:
                got = ber_service.inst_ber(gamma_l, M, rho)
            return abs(float(got) - threshold) / threshold

        checks.append(closed_forms.back_substitute(equation, l, value, residual_of))
    plan.diagnostics.closed_forms.extend(checks)

    if not all(check.adopted for check in checks):
        return plan
    adopted = np.array([check.value for check in checks])
    if np.any(np.diff(adopted) <= 0.0):
        return plan
    P = ctx.tail(adopted[0])
    candidate = PolicyPlan(
        kind=plan.kind,
        modulation=plan.modulation,
        link=plan.link,
        boundaries=adopted,
        modes=plan.modes,
        powers=np.full(len(plan.modes), ctx.link.s_bar / P),
        inversion=False,
        lam=plan.lam,
        reading=plan.reading,
        diagnostics=plan.diagnostics,
    )
    saved = dict(plan.diagnostics.residuals)
    _record_cpow_residuals(ctx, candidate, threshold)
    if _closes(candidate.diagnostics.residuals, POWER_TOL, BOUNDARY_TOL):
        candidate.diagnostics.notes.append(f"boundaries taken from {equation}")
        return candidate
    plan.diagnostics.residuals = saved
    return plan


def _closes(residuals: dict[str, float], power_tol: float, boundary_tol: float) -> bool:
    return (
        residuals.get("average_power", 0.0) <= power_tol
        and residuals.get("boundary_ber", 0.0) <= boundary_tol
    )


def solve_arate_cpow_iber(
    link: LinkBudget,
    mods: Optional[ModulationSet],
    params: JftsParams,
    cfg: Optional[NumericsConfig] = None,
    *,
    coeffs: Optional[JftsCoefficients] = None,
    reading: IberReading = IberReading.INSTANTANEOUS,
    check_closed_forms: Optional[bool] = None,
) -> PolicyPlan:
    ctx = make_context(link, mods, params, cfg, coeffs, reading, check_closed_forms)
    return _instrumented(PolicyKind.ARATE_CPOW_IBER, lambda: _solve_cpow_iber(ctx))


def _solve_cpow_iber(ctx: SolveContext) -> PolicyPlan:
    plan = _cpow_plan(ctx, PolicyKind.ARATE_CPOW_IBER, ctx.link.tber)
    if ctx.check_closed_forms:
        plan = _check_cpow_closed_forms(ctx, plan, ctx.link.tber, "cpow_boundary")
    _assert_closed(plan, POWER_TOL, BOUNDARY_TOL)
    return plan


# ============================================================================
# Constant power, adaptive rate, average BER
# ============================================================================

def solve_arate_cpow_aber(
    link: LinkBudget,
    mods: Optional[ModulationSet],
    params: JftsParams,
    cfg: Optional[NumericsConfig] = None,
    *,
    coeffs: Optional[JftsCoefficients] = None,
    weighting: BerWeighting = BerWeighting.BITS,
    check_closed_forms: Optional[bool] = None,
) -> PolicyPlan:
    ctx = make_context(link, mods, params, cfg, coeffs, IberReading.INSTANTANEOUS,
                       check_closed_forms)
    return _instrumented(PolicyKind.ARATE_CPOW_ABER, lambda: _solve_cpow_aber(ctx, weighting))


def _solve_cpow_aber(ctx: SolveContext, weighting: BerWeighting) -> PolicyPlan:
    """
    Bracket λ on both signs (τ = TBER - 1/λ must stay in (0, 0.2)), then
    bisect inside the bracket. Average BER grows with τ.
    """
    tber = ctx.link.tber
    kind = PolicyKind.ARATE_CPOW_ABER
    evaluated: dict[float, tuple[float, PolicyPlan]] = {}

    def residual(lam: float) -> Optional[float]:
        tau = tber - 1.0 / lam
        if not 0.0 < tau < ber_service.BER_CEILING:
            return None
        if lam not in evaluated:
            plan = _cpow_plan(ctx, kind, tau, lam=lam)
            avg = ber_service.average_ber(plan, ctx.coeffs, weighting)
            evaluated[lam] = ((avg - tber) / tber, plan)
        return evaluated[lam][0]

    candidates = []
    for sign in (-1.0, 1.0):
        for k in range(MAX_EXPANSIONS + 1):
            lam = sign * 10.0 ** k
            r = residual(lam)
            if r is not None:
                candidates.append((tber - 1.0 / lam, lam, r))
    candidates.sort()

    brackets: list[tuple[float, float]] = []
    chosen: Optional[tuple[float, float]] = None
    for (_, lam_lo, r_lo), (_, lam_hi, r_hi) in zip(candidates, candidates[1:]):
        brackets.append((lam_lo, lam_hi))
        if r_lo <= 0.0 <= r_hi:
            chosen = (lam_lo, lam_hi)
            break
    log_diagnostic_event(
        DiagnosticEventType.BRACKET,
        DiagnosticSeverity.INFO,
        "A-BER multiplier bracket search",
        source=kind.value,
        additional_data={"brackets": len(brackets), "found": chosen is not None},
    )
    if chosen is None:
        raise InfeasiblePlanError(
            "average BER residual never changes sign over the λ bracket", kind=kind.value
        )

    lam_lo, lam_hi = chosen
    iterations = 0
    if lam_lo * lam_hi > 0.0:
        # τ is monotone in λ on one sign; r(lam_lo) <= 0 <= r(lam_hi)
        while iterations < MAX_ITERATIONS:
            iterations += 1
            mid = 0.5 * (lam_lo + lam_hi)
            r_mid = residual(mid)
            if r_mid is None:
                break
            if r_mid <= 0.0:
                lam_lo = mid
            else:
                lam_hi = mid
            if abs(lam_hi - lam_lo) <= LAMBDA_REL_TOL * abs(mid) or r_mid == 0.0:
                break
        best = min((lam_lo, lam_hi), key=lambda lam: abs(evaluated[lam][0]))
    else:
        # Root within 1e-12 of τ = TBER on either side of λ = ±∞
        best = min((lam_lo, lam_hi), key=lambda lam: abs(evaluated[lam][0]))

    r_best, plan = evaluated[best]
    d = plan.diagnostics
    d.iterations += iterations
    d.brackets = brackets
    d.lambda_sign = 1 if best > 0 else -1
    d.residuals["average_ber"] = abs(r_best)
    if ctx.check_closed_forms:
        plan = _check_cpow_closed_forms(ctx, plan, tber - 1.0 / best, "aber_boundary")
    _assert_closed(plan, POWER_TOL, BOUNDARY_TOL)
    if abs(r_best) > ABER_TOL:
        raise ConvergenceError("average BER misses the target", iterations, abs(r_best))
    return plan


# ============================================================================
# Constant rate, adaptive power
# ============================================================================

def solve_crate_apow_iber(
    link: LinkBudget,
    mods: Optional[ModulationSet],
    params: JftsParams,
    cfg: Optional[NumericsConfig] = None,
    *,
    coeffs: Optional[JftsCoefficients] = None,
    check_closed_forms: Optional[bool] = None,
) -> PolicyPlan:
    ctx = make_context(link, mods, params, cfg, coeffs, IberReading.INSTANTANEOUS,
                       check_closed_forms)
    return _instrumented(PolicyKind.CRATE_APOW_IBER, lambda: _solve_crate(ctx))


def _geometric_bisect(
    excess: Callable[[float], float], lo: float, hi: float
) -> tuple[float, int]:
    """Root of a decreasing function with excess(lo) > 0 >= excess(hi)"""
    iterations = 0
    while iterations < MAX_ITERATIONS and hi / lo - 1.0 > LAMBDA_REL_TOL:
        iterations += 1
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi), iterations


def _solve_crate(ctx: SolveContext) -> PolicyPlan:
    kind = PolicyKind.CRATE_APOW_IBER
    top = ctx.mods.active_indices[-1]
    M = float(ctx.mods.sizes[top])
    k = ber_service.kappa(M, ctx.link.tber)

    def excess(gamma0: float) -> float:
        return k * float(jfts_service.inverse_tail(ctx.mix, np.array(gamma0))) - 1.0

    hi = k
    lo = hi
    expansions = 0
    while True:
        lo *= 0.1
        expansions += 1
        if excess(lo) > 0.0:
            break
        if lo < 1e-300 or expansions > 400:
            raise InfeasiblePlanError(
                "power integral not bracketable: even γ₀ → 0 leaves power unspent",
                kind=kind.value,
                mode=int(M),
            )
    gamma0, iterations = _geometric_bisect(excess, lo, hi)
    diagnostics = PlanDiagnostics(iterations=iterations, brackets=[(lo, hi)])
    plan = PolicyPlan(
        kind=kind,
        modulation=ctx.mods,
        link=ctx.link,
        boundaries=np.array([gamma0]),
        modes=(top,),
        powers=np.array([k * ctx.link.s_bar / gamma0]),
        inversion=True,
        diagnostics=diagnostics,
    )
    diagnostics.residuals["average_power"] = abs(
        k * jfts_service.inverse_moment(gamma0, math.inf, ctx.link.gamma_bar, ctx.coeffs) - 1.0
    )
    grid = gamma0 * np.array([1.0, 2.0, 4.0, 8.0])
    profile = power_profile(plan, grid)
    diagnostics.residuals["inversion_ber"] = float(np.max(
        np.abs(ber_service.inst_ber(grid, M, profile / ctx.link.s_bar) - ctx.link.tber)
    ) / ctx.link.tber)
    diagnostics.tail_ber = [
        float(ber_service.mixture_ber_tail(ctx.mix, np.array(gamma0), M, plan.powers[0] / ctx.link.s_bar))
    ]

    if ctx.check_closed_forms:
        for j, gamma in enumerate(grid[:3]):
            value, errors = closed_forms.crate_power(ctx.mix, float(gamma), ctx.link.tber,
                                                     ctx.link.s_bar)
            diagnostics.closed_forms.append(closed_forms.back_substitute(
                "crate_power", j, value,
                lambda S, g=float(gamma): abs(
                    ber_service.inst_ber(g, M, S / ctx.link.s_bar) - ctx.link.tber
                ) / ctx.link.tber,
                errors,
            ))
    _assert_closed(plan, CRATE_POWER_TOL, BOUNDARY_TOL)
    if diagnostics.residuals["inversion_ber"] > POWER_TOL:
        raise ConvergenceError("channel inversion misses the target BER", iterations,
                               diagnostics.residuals["inversion_ber"])
    return plan


# ============================================================================
# Adaptive rate, adaptive power
# ============================================================================

def solve_arate_apow_iber(
    link: LinkBudget,
    mods: Optional[ModulationSet],
    params: JftsParams,
    cfg: Optional[NumericsConfig] = None,
    *,
    coeffs: Optional[JftsCoefficients] = None,
    check_closed_forms: Optional[bool] = None,
) -> PolicyPlan:
    ctx = make_context(link, mods, params, cfg, coeffs, IberReading.INSTANTANEOUS,
                       check_closed_forms)
    return _instrumented(PolicyKind.ARATE_APOW_IBER, lambda: _solve_apow(ctx))


def _solve_apow(ctx: SolveContext) -> PolicyPlan:
    """
    γ_l = λ S̄ (κ_l - κ_{l-1})/(p_l - p_{l-1}) with κ_{-1} = p_{-1} = 0;
    λ > 0 bisected on Σ κ_l ∫_{region l} f/γ = 1.
    """
    kind = PolicyKind.ARATE_APOW_IBER
    active = ctx.active
    kappas = _kappas(ctx, active, ctx.link.tber)
    bits = ctx.bits(active)
    ratios = np.diff(np.append(0.0, kappas)) / np.diff(np.append(0.0, bits))
    if np.any(np.diff(ratios) <= 0.0):
        raise InfeasiblePlanError(
            "Kuhn-Tucker spacing gives non-increasing boundaries", kind=kind.value
        )
    s_bar = ctx.link.s_bar

    def power_excess(lam: float) -> float:
        edges = np.append(lam * s_bar * ratios, np.inf)
        inv = jfts_service.inverse_tail(ctx.mix, edges)
        inv[-1] = 0.0
        return float(np.dot(kappas, inv[:-1] - inv[1:])) - 1.0

    lo = hi = 1.0
    brackets = [(lo, hi)]
    expansions = 0
    while power_excess(lo) <= 0.0:
        lo *= 0.1
        expansions += 1
        brackets.append((lo, hi))
        if expansions > MAX_EXPANSIONS:
            raise InfeasiblePlanError("multiplier not bracketable from above", kind=kind.value)
    expansions = 0
    while power_excess(hi) > 0.0:
        hi *= 10.0
        expansions += 1
        brackets.append((lo, hi))
        if expansions > MAX_EXPANSIONS:
            raise InfeasiblePlanError("multiplier not bracketable from below", kind=kind.value)

    lam, iterations = _geometric_bisect(power_excess, lo, hi)
    boundaries = lam * s_bar * ratios
    diagnostics = PlanDiagnostics(iterations=iterations, brackets=brackets, lambda_sign=1)
    plan = PolicyPlan(
        kind=kind,
        modulation=ctx.mods,
        link=ctx.link,
        boundaries=boundaries,
        modes=active,
        powers=kappas * s_bar / boundaries,
        inversion=True,
        lam=lam,
        diagnostics=diagnostics,
    )
    diagnostics.residuals["average_power"] = abs(power_excess(lam))
    diagnostics.residuals["boundary_ber"] = max(
        _identity_residual(ctx, plan, l, ctx.link.tber) for l in range(len(active))
    )
    previous = np.append(0.0, kappas[:-1]) * s_bar / boundaries
    spacing = (plan.powers - previous) - np.diff(np.append(0.0, bits)) / lam
    diagnostics.residuals["kt_spacing"] = float(np.max(np.abs(spacing) / plan.powers))
    diagnostics.tail_ber = [
        float(ber_service.mixture_ber_tail(ctx.mix, np.array(g), M, S / s_bar))
        for g, M, S in zip(boundaries, plan.region_sizes, plan.powers)
    ]

    if ctx.check_closed_forms:
        _check_apow_closed_forms(ctx, plan)
    _assert_closed(plan, APOW_POWER_TOL, BOUNDARY_TOL)
    return plan


def _check_apow_closed_forms(ctx: SolveContext, plan: PolicyPlan) -> None:
    tber, s_bar = ctx.link.tber, ctx.link.s_bar
    sizes = plan.region_sizes
    bits = plan.region_bits
    for l, (gamma_l, M) in enumerate(zip(plan.boundaries, sizes)):
        value, errors = closed_forms.arate_power(ctx.mix, M, float(gamma_l), tber, s_bar)
        plan.diagnostics.closed_forms.append(closed_forms.back_substitute(
            "apow_power", l, value,
            lambda S, g=float(gamma_l), M=M: abs(ber_service.inst_ber(g, M, S / s_bar) - tber) / tber,
            errors,
        ))
        M_prev = sizes[l - 1] if l > 0 else 1.0
        p_prev = bits[l - 1] if l > 0 else 0.0
        target = (bits[l] - p_prev) / plan.lam
        lhs, errors = closed_forms.spacing_lhs(ctx.mix, M_prev, M, float(gamma_l), tber, s_bar)
        plan.diagnostics.closed_forms.append(closed_forms.back_substitute(
            "apow_spacing", l, lhs, lambda v, target=target: abs(v - target) / abs(target), errors,
        ))


# ============================================================================
# Dispatch, power profile, bookkeeping
# ============================================================================

def _assert_closed(plan: PolicyPlan, power_tol: float, boundary_tol: float) -> None:
    residuals = plan.diagnostics.residuals
    for name, tol in (("average_power", power_tol), ("boundary_ber", boundary_tol)):
        value = residuals.get(name)
        if value is not None and not value <= tol:
            raise ConvergenceError(
                f"{plan.kind.value} plan violates its {name.replace('_', ' ')} constraint",
                plan.diagnostics.iterations,
                value,
            )


def _instrumented(kind: PolicyKind, solve: Callable[[], PolicyPlan]) -> PolicyPlan:
    started = time.perf_counter()
    try:
        plan = solve()
    except InfeasiblePlanError:
        metrics.plan_solves_total.labels(kind=kind.value, outcome="infeasible").inc()
        raise
    except Exception:
        metrics.plan_solves_total.labels(kind=kind.value, outcome="error").inc()
        raise
    elapsed = time.perf_counter() - started
    metrics.plan_solves_total.labels(kind=kind.value, outcome="solved").inc()
    metrics.plan_solve_seconds.labels(kind=kind.value).observe(elapsed)
    logger.info(
        "Plan solved",
        kind=kind.value,
        gamma_bar_db=round(plan.link.gamma_bar_db, 6),
        tber=plan.link.tber,
        cutoff=plan.cutoff,
        regions=len(plan.modes),
        iterations=plan.diagnostics.iterations,
        seconds=round(elapsed, 4),
    )
    return plan


SOLVERS = {
    PolicyKind.ARATE_CPOW_IBER: solve_arate_cpow_iber,
    PolicyKind.ARATE_CPOW_ABER: solve_arate_cpow_aber,
    PolicyKind.CRATE_APOW_IBER: solve_crate_apow_iber,
    PolicyKind.ARATE_APOW_IBER: solve_arate_apow_iber,
}


def solve(
    kind: PolicyKind,
    link: LinkBudget,
    mods: Optional[ModulationSet],
    params: JftsParams,
    cfg: Optional[NumericsConfig] = None,
    *,
    coeffs: Optional[JftsCoefficients] = None,
    check_closed_forms: Optional[bool] = None,
    on_infeasible: Literal["raise", "off"] = "raise",
) -> PolicyPlan:
    """
    Solve any policy. With on_infeasible="off" an infeasible point becomes
    the always-off plan, flagged with the reason.
    """
    try:
        return SOLVERS[PolicyKind(kind)](
            link, mods, params, cfg, coeffs=coeffs, check_closed_forms=check_closed_forms
        )
    except InfeasiblePlanError as exc:
        log_diagnostic_event(
            DiagnosticEventType.INFEASIBLE,
            DiagnosticSeverity.ERROR,
            "Plan infeasible",
            source=PolicyKind(kind).value,
            additional_data={"reason": str(exc), "gamma_bar": link.gamma_bar, "tber": link.tber},
        )
        if on_infeasible == "off":
            return all_off_plan(PolicyKind(kind), link, mods, reason=str(exc))
        raise


def power_profile(plan: PolicyPlan, gamma):
    """Transmit power at γ: 0 below the cutoff, then per-region law"""
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g >= 0.0)):
        raise InvalidArgumentError("gamma must be >= 0")
    out = np.zeros(g.shape)
    if not plan.is_all_off:
        idx = plan.region_index(g)
        on = idx >= 0
        if plan.inversion:
            out[on] = plan.powers[idx[on]] * plan.boundaries[idx[on]] / g[on]
        else:
            out[on] = plan.powers[idx[on]]
    return float(out) if out.ndim == 0 else out


def to_document(plan: PolicyPlan, metadata: Optional[dict] = None) -> PlanDocument:
    """Serializable plan; powers are per-region constants or values at γ_l"""
    return PlanDocument(
        kind=plan.kind,
        gamma_bar_db=plan.link.gamma_bar_db,
        tber=plan.link.tber,
        cutoff=plan.cutoff if not plan.is_all_off else None,
        boundaries=[float(g) for g in plan.boundaries],
        powers=[float(s) for s in plan.powers],
        modes=[int(b) for b in plan.region_bits],
        power_law="inversion" if plan.inversion else "constant",
        lambda_=plan.lam,
        diagnostics=plan.diagnostics.as_dict(),
        metadata=dict(metadata or {}),
    )
