"""
ASE Service

Average spectral efficiency of solved plans in closed form,
Monte Carlo estimates of ASE, power, BER and mode occupancy, γ̄ sweeps and
their CSV form.

Regions follow "M_l is used while γ_l ≤ γ < γ_{l+1}"; the closed-form sum as printed
pairs p_l with [γ_{l-1}, γ_l), which is the same sum with the index shifted.
"""

import io
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from jfts_am import __version__
from jfts_am.core.config import settings
from jfts_am.core.exceptions import InvalidArgumentError
from jfts_am.models.channel import JftsCoefficients
from jfts_am.models.enums import PolicyKind
from jfts_am.models.plan import PolicyPlan
from jfts_am.observability.diagnostics import (
    DiagnosticEventType,
    DiagnosticSeverity,
    log_diagnostic_event,
)
from jfts_am.observability.logging import get_logger
from jfts_am.schemas.channel import JftsParams, NumericsConfig, ScenarioPreset
from jfts_am.schemas.link import LinkBudget, ModulationSet
from jfts_am.schemas.results import AseCurve, AsePoint, McReport
from jfts_am.services import ber_service, jfts_service, policy_service

logger = get_logger()

MIN_MC_SAMPLES = 10_000
CSV_COLUMNS = [
    "policy",
    "scenario",
    "tber",
    "gamma_bar_db",
    "ase_analytic",
    "ase_mc",
    "ase_mc_stderr",
    "mean_power",
    "mean_ber",
]
REGION_NOTE = "region l spans [gamma_l, gamma_{l+1}) and uses mode l; the printed sum indexes it as [gamma_{l-1}, gamma_l)"
_BERNOULLI_STREAM = 1


def _require_plan(plan: Any) -> PolicyPlan:
    if not isinstance(plan, PolicyPlan):
        raise InvalidArgumentError("ASE needs a solved PolicyPlan")
    return plan


def ase_analytic(plan: PolicyPlan, coeffs: JftsCoefficients, link: Optional[LinkBudget] = None) -> float:
    """
    Σ_l p_l P(γ_l ≤ γ < γ_{l+1}); for the constant-rate plan this is
    p_max P(γ ≥ γ₀).
    """
    plan = _require_plan(plan)
    if link is not None and link != plan.link:
        raise InvalidArgumentError("link budget does not match the plan's")
    if plan.is_all_off:
        return 0.0
    probs = ber_service.region_probabilities(plan, coeffs)
    value = float(np.dot(plan.region_bits, probs))
    return min(max(value, 0.0), float(plan.modulation.p_max))


def _ratio_stderr(numerator: np.ndarray, denominator: np.ndarray) -> tuple[float, float]:
    """Mean ratio Σa/Σb and its delta-method standard error"""
    n = numerator.size
    mean_b = float(denominator.mean())
    if mean_b <= 0.0:
        return 0.0, 0.0
    ratio = float(numerator.mean()) / mean_b
    residual = numerator - ratio * denominator
    return ratio, float(residual.std(ddof=1) / (math.sqrt(n) * mean_b)) if n > 1 else 0.0


def _stderr(values: np.ndarray) -> float:
    return float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0


def mc_evaluate(
    plan: PolicyPlan,
    params: JftsParams,
    link: Optional[LinkBudget] = None,
    count: Optional[int] = None,
    seed: Optional[int] = None,
    stream: int = 0,
    bernoulli: bool = False,
) -> McReport:
    """
    Draw γ, map each sample to its region and accumulate bits, power and
    errors. Errors are expected counts p·BER(γ) unless `bernoulli`, which
    draws them from Binomial(p, BER(γ)) on a separate sub-stream.
    """
    plan = _require_plan(plan)
    link = link or plan.link
    count = settings.MC_SAMPLES if count is None else count
    seed = settings.SEED if seed is None else seed
    if isinstance(count, bool) or int(count) != count or count < MIN_MC_SAMPLES:
        raise InvalidArgumentError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {count}")
    count = int(count)

    gamma = jfts_service.sample_snr(params, link.gamma_bar, count, seed, stream).samples
    modes = list(plan.modulation.bits)
    mode_of_sample = np.full(count, plan.modulation.off_index if plan.modulation.off_index is not None else -1)
    bits = np.zeros(count)
    power = np.zeros(count)
    ber = np.zeros(count)
    region_ber: list[Optional[float]] = [None] * len(modes)

    if not plan.is_all_off:
        region = plan.region_index(gamma)
        on = region >= 0
        mode_idx = np.asarray(plan.modes)[region[on]]
        mode_of_sample[on] = mode_idx
        bits[on] = plan.region_bits[region[on]]
        power[on] = policy_service.power_profile(plan, gamma[on])
        sizes = plan.region_sizes[region[on]]
        ber[on] = ber_service.BER_CEILING * np.exp(
            -ber_service.BER_EXPONENT * gamma[on] * power[on] / ((sizes - 1.0) * link.s_bar)
        )
        for l, mode in enumerate(plan.modes):
            members = region == l
            if np.any(members):
                region_ber[mode] = float(ber[members].mean())

    if bernoulli:
        rng = jfts_service.substream(seed, stream, _BERNOULLI_STREAM)
        errors = rng.binomial(bits.astype(np.int64), ber).astype(float)
    else:
        errors = bits * ber

    occupancy = []
    occupancy_stderr = []
    for index in range(len(modes)):
        p = float(np.count_nonzero(mode_of_sample == index)) / count
        occupancy.append(p)
        occupancy_stderr.append(math.sqrt(p * (1.0 - p) / count))
    if abs(sum(occupancy) - 1.0) > 1e-12:
        raise InvalidArgumentError("modulation set without an off mode cannot host a cutoff")

    mean_ber, mean_ber_stderr = _ratio_stderr(errors, bits)
    report = McReport(
        sample_count=count,
        seed=int(seed),
        stream=int(stream),
        bernoulli=bernoulli,
        ase=float(bits.mean()),
        ase_stderr=_stderr(bits),
        mean_power=float(power.mean()),
        mean_power_stderr=_stderr(power),
        mean_ber=mean_ber,
        mean_ber_stderr=mean_ber_stderr,
        modes=modes,
        occupancy=occupancy,
        occupancy_stderr=occupancy_stderr,
        region_ber=region_ber,
    )
    logger.info(
        "Monte Carlo evaluated",
        kind=plan.kind.value,
        count=count,
        seed=seed,
        stream=stream,
        ase=report.ase,
        mean_power=report.mean_power,
        mean_ber=report.mean_ber,
    )
    return report


# ============================================================================
# Sweeps
# ============================================================================

def parse_grid(spec: str) -> list[float]:
    """`start:stop:step` (inclusive), a single value, or a comma list, in dB"""
    text = spec.strip()
    if not text:
        raise InvalidArgumentError("empty SNR grid")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise InvalidArgumentError(f"SNR grid needs start:stop:step, got {spec!r}")
            start, stop, step = parts
            if step <= 0.0 or stop < start:
                raise InvalidArgumentError(f"SNR grid must ascend with a positive step, got {spec!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 10) for k in range(count)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        if isinstance(exc, InvalidArgumentError):
            raise
        raise InvalidArgumentError(f"unreadable SNR grid {spec!r}") from exc


def _sweep_point(
    kind: PolicyKind,
    index: int,
    gamma_bar_db: float,
    tber: float,
    params: JftsParams,
    coeffs: JftsCoefficients,
    mods: ModulationSet,
    mc_count: Optional[int],
    seed: int,
    bernoulli: bool,
) -> AsePoint:
    link = LinkBudget.from_db(gamma_bar_db, tber)
    plan = policy_service.solve(
        kind, link, mods, params, coeffs.numerics,
        coeffs=coeffs, check_closed_forms=False, on_infeasible="off",
    )
    point = AsePoint(
        gamma_bar_db=gamma_bar_db,
        ase_analytic=ase_analytic(plan, coeffs),
        infeasible=plan.diagnostics.infeasible_reason is not None,
    )
    if mc_count:
        report = mc_evaluate(plan, params, link, mc_count, seed, stream=index, bernoulli=bernoulli)
        point.ase_mc = report.ase
        point.ase_mc_stderr = report.ase_stderr
        point.mean_power = report.mean_power
        point.mean_ber = report.mean_ber
    return point


def sweep(
    kind: PolicyKind,
    scenario: ScenarioPreset,
    tber: float,
    grid_db: Sequence[float],
    cfg: Optional[NumericsConfig] = None,
    *,
    mods: Optional[ModulationSet] = None,
    mc_count: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    bernoulli: bool = False,
) -> AseCurve:
    """
    Solve and evaluate one plan per γ̄. Infeasible points become ASE 0 and
    are flagged; a non-monotone curve is flagged and logged, not raised.
    """
    grid = [float(g) for g in grid_db]
    if not grid:
        raise InvalidArgumentError("SNR grid is empty")
    cfg = cfg or NumericsConfig()
    mods = mods or ModulationSet()
    seed = settings.SEED if seed is None else seed
    workers = settings.WORKERS if workers is None else workers
    params = scenario.to_params()
    coeffs = jfts_service.get_coefficients(params, cfg)
    kind = PolicyKind(kind)

    def point(indexed: tuple[int, float]) -> AsePoint:
        index, g = indexed
        return _sweep_point(kind, index, g, tber, params, coeffs, mods, mc_count, seed, bernoulli)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(point, enumerate(grid)))
    else:
        points = [point(item) for item in enumerate(grid)]

    values = [p.ase_analytic for p in points]
    monotone = all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
    if not monotone:
        log_diagnostic_event(
            DiagnosticEventType.NON_MONOTONE,
            DiagnosticSeverity.WARNING,
            "ASE decreases along the SNR grid",
            source=kind.value,
            additional_data={"scenario": scenario.name, "tber": tber},
        )
    return AseCurve(
        policy=kind,
        scenario=scenario.name,
        tber=tber,
        p_max=mods.p_max,
        points=points,
        monotone=monotone,
    )


def curves_frame(curves: Iterable[AseCurve]) -> pd.DataFrame:
    rows = [
        {
            "policy": curve.policy.cli_name,
            "scenario": curve.scenario,
            "tber": curve.tber,
            "gamma_bar_db": p.gamma_bar_db,
            "ase_analytic": p.ase_analytic,
            "ase_mc": p.ase_mc,
            "ase_mc_stderr": p.ase_mc_stderr,
            "mean_power": p.mean_power,
            "mean_ber": p.mean_ber,
        }
        for curve in curves
        for p in curve.points
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def metadata_lines(metadata: dict[str, Any]) -> list[str]:
    """`# key: value` lines, keys sorted"""
    merged = {"version": __version__, **metadata}
    return [f"# {key}: {merged[key]}" for key in sorted(merged)]


def curves_to_csv(curves: Iterable[AseCurve], metadata: dict[str, Any]) -> str:
    """CSV text with `#` metadata lines ahead of the header"""
    frame = curves_frame(curves)
    buffer = io.StringIO()
    for line in metadata_lines({**metadata, "regions": REGION_NOTE}):
        buffer.write(line + "\n")
    frame.to_csv(buffer, index=False, float_format="%.12g", na_rep="", lineterminator="\n")
    return buffer.getvalue()
