"""
Acceptance Suite

The checks behind `jfts-am verify`, numbered by acceptance criterion:

1. Special-function closure (Lambert W, Gauss-Hermite, Γ(n, 0))
2. Density sanity (unit mass by quadrature, nonnegativity)
3. Sampler against analytic CDF (KS distance)
4. Closed-form expected BER tail against quadrature
5. Constraint residuals of solved plans, checked by Monte Carlo
6. Analytic against Monte Carlo ASE
7. Qualitative orderings (policy, scenario, TBER)
8. Determinism of seeded sweeps

A failing check tied to a recorded open question (KS distance of the
density, A-Pow I-BER below A-BER, C-Rate ASE rising with walls while the
top-mode inversion threshold sits above γ̄) is FLAGGED instead of FAIL. So is
a Monte Carlo miss that stays unresolved after redrawing with more samples.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from jfts_am.core import specfun
from jfts_am.core.config import settings
from jfts_am.models.enums import CheckStatus, PolicyKind
from jfts_am.models.plan import PolicyPlan
from jfts_am.observability.logging import get_logger
from jfts_am.schemas.channel import NumericsConfig, ScenarioPreset
from jfts_am.schemas.link import LinkBudget, ModulationSet
from jfts_am.services import ase_service, ber_service, jfts_service, policy_service
from jfts_am.services.scenario_service import BUILTIN_PRESETS, WALL_SCENARIOS

logger = get_logger()

KS_LIMIT = 0.05
POWER_REL_TOL = 0.01
IBER_RESIDUAL_TOL = 1e-4
ABER_REL_TOL = 0.10
ASE_SIGMAS = 4.0
MASS_TOL = 1e-6
TAIL_REL_TOL = 1e-4
LAMBERT_RESIDUAL_TOL = 1e-12
HERMITE_TOL = 1e-10
# A Monte Carlo estimate outside tolerance is redrawn once with this many times the samples
ESCALATION_FACTOR = 4
_ESCALATION_STREAM = 10_000


@dataclass(frozen=True)
class SuitePlan:
    """Sizes of one verify run"""

    mc_samples: int
    lambert_samples: int
    density_grid_db: tuple[float, ...]
    residual_grid_db: tuple[float, ...]
    residual_tbers: tuple[float, ...]
    tail_points: int
    determinism_grid_db: tuple[float, ...]


FULL = SuitePlan(
    mc_samples=settings.MC_SAMPLES,
    lambert_samples=10_000,
    density_grid_db=(0.0, 10.0, 20.0, 30.0),
    residual_grid_db=(10.0, 20.0, 30.0),
    residual_tbers=(1e-3, 1e-6),
    tail_points=5,
    determinism_grid_db=(10.0, 20.0, 30.0),
)

QUICK = SuitePlan(
    mc_samples=settings.QUICK_MC_SAMPLES,
    lambert_samples=1_000,
    density_grid_db=(0.0, 20.0),
    residual_grid_db=(20.0,),
    residual_tbers=(1e-3,),
    tail_points=3,
    determinism_grid_db=(10.0, 20.0),
)


@dataclass
class AcceptanceCheck:
    """Outcome of one acceptance check"""

    criterion: int
    name: str
    status: CheckStatus
    measured: float
    limit: float
    detail: str = ""
    seconds: float = 0.0

    @property
    def failed(self) -> bool:
        return self.status is CheckStatus.FAIL


def _status(ok: bool, flag_on_failure: bool = False) -> CheckStatus:
    if ok:
        return CheckStatus.PASS
    return CheckStatus.FLAGGED if flag_on_failure else CheckStatus.FAIL


def _relative(got: float, want: float) -> float:
    if got == want:
        return 0.0
    return abs(got - want) / max(abs(want), 1e-300)


def mc_tolerance_status(estimate: float, target: float, rel_tol: float, stderr: float) -> CheckStatus:
    """
    PASS within rel_tol of the target. A miss is FLAGGED only when it lies
    inside ASE_SIGMAS standard errors and that band is wider than the
    tolerance, so the sample size cannot resolve it. Anything else FAILs.
    """
    error = abs(estimate - target)
    allowed = rel_tol * abs(target)
    if error <= allowed:
        return CheckStatus.PASS
    band = ASE_SIGMAS * stderr
    if error <= band and band > allowed:
        return CheckStatus.FLAGGED
    return CheckStatus.FAIL


@dataclass
class AcceptanceSuite:
    """Run the acceptance checks against one numerics configuration"""

    quick: bool = False
    cfg: NumericsConfig = field(default_factory=NumericsConfig)
    seed: int = field(default_factory=lambda: settings.SEED)
    mods: ModulationSet = field(default_factory=ModulationSet)
    checks: list[AcceptanceCheck] = field(default_factory=list)

    @property
    def sizes(self) -> SuitePlan:
        return QUICK if self.quick else FULL

    def run(self) -> list[AcceptanceCheck]:
        self.checks = []
        for step in (
            self.check_special_functions,
            self.check_density,
            self.check_sampler,
            self.check_expected_ber,
            self.check_plans,
            self.check_orderings,
            self.check_determinism,
        ):
            self._timed(step)
        failed = sum(check.failed for check in self.checks)
        flagged = sum(check.status is CheckStatus.FLAGGED for check in self.checks)
        logger.info(
            "Acceptance suite finished",
            quick=self.quick,
            checks=len(self.checks),
            failed=failed,
            flagged=flagged,
        )
        return self.checks

    @property
    def passed(self) -> bool:
        return not any(check.failed for check in self.checks)

    def _timed(self, step: Callable[[], list[AcceptanceCheck]]) -> None:
        started = time.perf_counter()
        produced = step()
        elapsed = time.perf_counter() - started
        for check in produced:
            check.seconds = elapsed / max(len(produced), 1)
            if check.status is not CheckStatus.PASS:
                logger.warning(
                    "Acceptance check not passed",
                    criterion=check.criterion,
                    check=check.name,
                    status=check.status.value,
                    measured=check.measured,
                    limit=check.limit,
                    detail=check.detail,
                )
        self.checks.extend(produced)

    def _coeffs(self, preset: ScenarioPreset):
        return jfts_service.get_coefficients(preset.to_params(), self.cfg)

    # ------------------------------------------------------------------
    # 1. Special functions
    # ------------------------------------------------------------------

    def check_special_functions(self) -> list[AcceptanceCheck]:
        rng = jfts_service.substream(self.seed, 0xA1)
        n = self.sizes.lambert_samples
        x = np.concatenate([
            rng.uniform(-specfun.INV_E, 1.0, n // 2),
            10.0 ** rng.uniform(0.0, 6.0, n - n // 2),
        ])
        w, domain_errors = specfun.lambert_w0_array(x)
        residual = float(np.max(np.abs(w * np.exp(w) - x) / np.maximum(1.0, np.abs(x))))
        checks = [
            AcceptanceCheck(
                1, "lambert_w_residual", _status(domain_errors == 0 and residual <= LAMBERT_RESIDUAL_TOL),
                residual, LAMBERT_RESIDUAL_TOL, f"{n} random arguments",
            )
        ]

        worst = 0.0
        for m in (2, 10, 20):
            rule = specfun.hermite_rule(m)
            for k in range(2 * m):
                exact = math.gamma((k + 1) / 2.0) if k % 2 == 0 else 0.0
                got = rule.integrate(rule.nodes ** k)
                worst = max(worst, abs(got - exact) / math.gamma((k + 1) / 2.0))
        checks.append(
            AcceptanceCheck(1, "hermite_exactness", _status(worst <= HERMITE_TOL), worst, HERMITE_TOL,
                            "degree 2m-1 at m = 2, 10, 20")
        )

        mismatched = [n for n in range(1, 32) if specfun.upper_gamma_int(n, 0.0) != float(math.factorial(n - 1))]
        checks.append(
            AcceptanceCheck(1, "upper_gamma_at_zero", _status(not mismatched), float(len(mismatched)), 0.0,
                            "Γ(n, 0) = (n-1)! for n <= 31")
        )
        return checks

    # ------------------------------------------------------------------
    # 2. Density
    # ------------------------------------------------------------------

    def _quadrature_mass(self, gamma_bar: float, coeffs) -> float:
        upper = self.cfg.oracle_upper * gamma_bar
        breaks = [0.0, 0.1 * gamma_bar, gamma_bar, 5.0 * gamma_bar, upper]
        total = 0.0
        for a, b in zip(breaks, breaks[1:]):
            value, _ = integrate.quad(
                lambda g: float(jfts_service.pdf(g, gamma_bar, coeffs)), a, b,
                limit=200, epsabs=1e-13, epsrel=1e-11,
            )
            total += value
        mix = jfts_service.mixture(coeffs, gamma_bar)
        return total + float(jfts_service.tail_probability(mix, np.array(upper)))

    def check_density(self) -> list[AcceptanceCheck]:
        worst_mass = 0.0
        negative = 0
        where = ""
        for preset in BUILTIN_PRESETS.values():
            coeffs = self._coeffs(preset)
            for gamma_bar_db in self.sizes.density_grid_db:
                gamma_bar = 10.0 ** (gamma_bar_db / 10.0)
                error = abs(self._quadrature_mass(gamma_bar, coeffs) - 1.0)
                if error > worst_mass:
                    worst_mass, where = error, f"{preset.name} at {gamma_bar_db:g} dB"
                grid = gamma_bar * np.logspace(-4, math.log10(self.cfg.oracle_upper), self.cfg.oracle_points)
                negative += int(np.count_nonzero(np.asarray(jfts_service.pdf(grid, gamma_bar, coeffs)) < 0.0))
        return [
            AcceptanceCheck(2, "density_unit_mass", _status(worst_mass <= MASS_TOL), worst_mass, MASS_TOL,
                            f"worst {where}"),
            AcceptanceCheck(2, "density_nonnegative", _status(negative == 0), float(negative), 0.0,
                            "negative values on the log grid"),
        ]

    # ------------------------------------------------------------------
    # 3. Sampler
    # ------------------------------------------------------------------

    def check_sampler(self) -> list[AcceptanceCheck]:
        checks = []
        gamma_bar = 10.0
        for stream, preset in enumerate(BUILTIN_PRESETS.values()):
            coeffs = self._coeffs(preset)
            draw = jfts_service.sample_snr(preset.to_params(), gamma_bar, self.sizes.mc_samples, self.seed, stream)
            distance = jfts_service.ks_distance(draw.samples, gamma_bar, coeffs)
            mean = jfts_service.mean_snr(gamma_bar, coeffs) / gamma_bar
            checks.append(
                AcceptanceCheck(
                    3, f"ks_{preset.name}", _status(distance <= KS_LIMIT, flag_on_failure=True),
                    distance, KS_LIMIT,
                    f"{self.cfg.series_form.value} density, analytic mean gain {mean:.4f}",
                )
            )
        return checks

    # ------------------------------------------------------------------
    # 4. expected BER tail
    # ------------------------------------------------------------------

    def check_expected_ber(self) -> list[AcceptanceCheck]:
        gamma_bar = 100.0
        M = 16.0
        n = self.sizes.tail_points
        offsets = np.linspace(0.0, 2.0, n) * gamma_bar
        powers = np.geomspace(0.25, 4.0, n)
        checks = []
        for preset in BUILTIN_PRESETS.values():
            coeffs = self._coeffs(preset)
            link = LinkBudget(gamma_bar=gamma_bar, tber=1e-3)
            upper = self.cfg.oracle_upper * gamma_bar
            worst = 0.0
            for gamma_l in offsets:
                for S in powers:
                    closed = float(ber_service.expected_ber_tail(gamma_l, M, S, link, coeffs))

                    def integrand(g: float, S: float = S) -> float:
                        return float(ber_service.inst_ber(g, M, S) * jfts_service.pdf(g, gamma_bar, coeffs))

                    breaks = sorted({gamma_l, gamma_l + gamma_bar, max(upper, gamma_l + 2 * gamma_bar)})
                    oracle = sum(
                        integrate.quad(integrand, a, b, limit=200, epsabs=0.0, epsrel=1e-10)[0]
                        for a, b in zip(breaks, breaks[1:])
                    )
                    if closed < 1e-280 and oracle < 1e-280:
                        continue
                    worst = max(worst, _relative(closed, oracle))
            checks.append(
                AcceptanceCheck(4, f"expected_ber_{preset.name}", _status(worst <= TAIL_REL_TOL), worst,
                                TAIL_REL_TOL, f"{n}x{n} (gamma_l, S) grid, M = 16")
            )
        return checks

    # ------------------------------------------------------------------
    # 5 and 6. Plans
    # ------------------------------------------------------------------

    def _plan_cell(
        self, kind: PolicyKind, preset: ScenarioPreset, gamma_bar_db: float, tber: float, stream: int
    ) -> tuple[Optional[PolicyPlan], list[tuple[str, CheckStatus, float, float]]]:
        params = preset.to_params()
        coeffs = self._coeffs(preset)
        link = LinkBudget.from_db(gamma_bar_db, tber)
        plan = policy_service.solve(kind, link, self.mods, params, self.cfg, coeffs=coeffs,
                                    check_closed_forms=False, on_infeasible="off")
        if plan.is_all_off:
            return None, []
        report = ase_service.mc_evaluate(plan, params, link, self.sizes.mc_samples, self.seed, stream)
        results = []

        power_status = mc_tolerance_status(report.mean_power, link.s_bar, POWER_REL_TOL,
                                           report.mean_power_stderr)
        ber_status = CheckStatus.PASS
        if kind is PolicyKind.ARATE_CPOW_ABER:
            ber_status = mc_tolerance_status(report.mean_ber, tber, ABER_REL_TOL, report.mean_ber_stderr)
        if power_status is not CheckStatus.PASS or ber_status is not CheckStatus.PASS:
            # Outside tolerance: re-estimate on a fresh stream with more samples
            report = ase_service.mc_evaluate(
                plan, params, link, ESCALATION_FACTOR * self.sizes.mc_samples, self.seed,
                stream + _ESCALATION_STREAM,
            )
            power_status = mc_tolerance_status(report.mean_power, link.s_bar, POWER_REL_TOL,
                                               report.mean_power_stderr)
            if kind is PolicyKind.ARATE_CPOW_ABER:
                ber_status = mc_tolerance_status(report.mean_ber, tber, ABER_REL_TOL,
                                                 report.mean_ber_stderr)
        results.append(("power", power_status, _relative(report.mean_power, link.s_bar), POWER_REL_TOL))

        if kind is PolicyKind.ARATE_CPOW_ABER:
            results.append(("average_ber", ber_status, _relative(report.mean_ber, tber), ABER_REL_TOL))
        else:
            residuals = plan.diagnostics.residuals
            ber_residual = max(
                residuals.get("boundary_ber", 0.0), residuals.get("inversion_ber", 0.0)
            )
            results.append(("iber_residual", _status(ber_residual <= IBER_RESIDUAL_TOL), ber_residual,
                            IBER_RESIDUAL_TOL))

        analytic = ase_service.ase_analytic(plan, coeffs)
        gap = abs(analytic - report.ase)
        sigmas = gap / report.ase_stderr if report.ase_stderr > 0 else (0.0 if gap < 1e-12 else math.inf)
        results.append(("ase_mc", _status(sigmas <= ASE_SIGMAS), sigmas, ASE_SIGMAS))
        return plan, results

    def check_plans(self) -> list[AcceptanceCheck]:
        tallies: dict[str, list] = {"power": [], "average_ber": [], "iber_residual": [], "ase_mc": []}
        skipped = 0
        stream = 100
        for preset_name in WALL_SCENARIOS:
            preset = BUILTIN_PRESETS[preset_name]
            for gamma_bar_db in self.sizes.residual_grid_db:
                for tber in self.sizes.residual_tbers:
                    for kind in PolicyKind:
                        stream += 1
                        plan, results = self._plan_cell(kind, preset, gamma_bar_db, tber, stream)
                        if plan is None:
                            skipped += 1
                            continue
                        cell = f"{kind.cli_name}/{preset_name}/{gamma_bar_db:g}dB/{tber:g}"
                        for name, status, measured, limit in results:
                            tallies[name].append((status, measured, limit, cell))

        checks = []
        labels = {
            "power": (5, "mc_mean_power"),
            "iber_residual": (5, "iber_residual"),
            "average_ber": (5, "aber_mc_average_ber"),
            "ase_mc": (6, "ase_analytic_vs_mc"),
        }
        for key, (criterion, name) in labels.items():
            rows = tallies[key]
            if not rows:
                continue
            failures = [row for row in rows if row[0] is CheckStatus.FAIL]
            unresolved = [row for row in rows if row[0] is CheckStatus.FLAGGED]
            worst = max(rows, key=lambda row: row[1])
            detail = f"{len(rows)} plans, {len(failures)} outside, worst {worst[3]}"
            if unresolved:
                detail += (
                    f", {len(unresolved)} outside but unresolved at this sample size "
                    f"({', '.join(row[3] for row in unresolved)})"
                )
            if skipped:
                detail += f", {skipped} infeasible cells skipped"
            status = CheckStatus.FAIL if failures else _status(not unresolved, flag_on_failure=True)
            checks.append(AcceptanceCheck(criterion, name, status, worst[1], worst[2], detail))
        return checks

    # ------------------------------------------------------------------
    # 7. Orderings
    # ------------------------------------------------------------------

    def _ase(self, kind: PolicyKind, preset: ScenarioPreset, gamma_bar_db: float, tber: float) -> float:
        coeffs = self._coeffs(preset)
        link = LinkBudget.from_db(gamma_bar_db, tber)
        plan = policy_service.solve(kind, link, self.mods, preset.to_params(), self.cfg, coeffs=coeffs,
                                    check_closed_forms=False, on_infeasible="off")
        return ase_service.ase_analytic(plan, coeffs)

    def check_orderings(self) -> list[AcceptanceCheck]:
        gamma_bar_db = 20.0
        table = {
            (kind, name, tber): self._ase(kind, BUILTIN_PRESETS[name], gamma_bar_db, tber)
            for kind in PolicyKind
            for name in WALL_SCENARIOS
            for tber in (1e-3, 1e-6)
        }
        slack = 1e-9
        checks = []

        below_others = []
        below_aber = []
        for name in WALL_SCENARIOS:
            best = table[(PolicyKind.ARATE_APOW_IBER, name, 1e-3)]
            for kind in PolicyKind:
                if table[(kind, name, 1e-3)] > best * (1.0 + slack):
                    (below_aber if kind is PolicyKind.ARATE_CPOW_ABER else below_others).append(name)
        status = CheckStatus.FAIL if below_others else _status(not below_aber, flag_on_failure=True)
        checks.append(
            AcceptanceCheck(
                7, "apow_highest_ase", status, float(len(below_others) + len(below_aber)), 0.0,
                f"below another policy in {sorted(set(below_others)) or 'none'}; "
                f"below A-BER in {sorted(set(below_aber)) or 'none'}",
            )
        )

        decreasing_violations = [
            (kind, a, b)
            for kind in PolicyKind
            for a, b in zip(WALL_SCENARIOS, WALL_SCENARIOS[1:])
            if table[(kind, b, 1e-3)] > table[(kind, a, 1e-3)] * (1.0 + slack)
        ]
        gamma_bar = 10.0 ** (gamma_bar_db / 10.0)
        top_threshold = ber_service.kappa(self.mods.M_max, 1e-3)
        inversion_above_mean = [
            v for v in decreasing_violations
            if v[0] is PolicyKind.CRATE_APOW_IBER and top_threshold > gamma_bar
        ]
        hard = [v for v in decreasing_violations if v not in inversion_above_mean]
        status = CheckStatus.FAIL if hard else _status(not inversion_above_mean, flag_on_failure=True)
        detail = str([(kind.cli_name, a, b) for kind, a, b in hard] or "none")
        if inversion_above_mean:
            detail += (
                f"; C-Rate rises with walls in {[(a, b) for _, a, b in inversion_above_mean]}, "
                f"top-mode threshold {top_threshold:.4g} above mean SNR {gamma_bar:.4g}"
            )
        checks.append(
            AcceptanceCheck(7, "ase_decreases_with_walls", status,
                            float(len(decreasing_violations)), 0.0, detail)
        )

        tber_violations = [
            (kind.cli_name, name)
            for kind in PolicyKind
            for name in WALL_SCENARIOS
            if table[(kind, name, 1e-6)] > table[(kind, name, 1e-3)] * (1.0 + slack)
        ]
        checks.append(
            AcceptanceCheck(7, "looser_tber_higher_ase", _status(not tber_violations),
                            float(len(tber_violations)), 0.0, str(tber_violations or "none"))
        )
        return checks

    # ------------------------------------------------------------------
    # 8. Determinism
    # ------------------------------------------------------------------

    def check_determinism(self) -> list[AcceptanceCheck]:
        preset = BUILTIN_PRESETS["same-room"]

        def render() -> str:
            curve = ase_service.sweep(
                PolicyKind.ARATE_CPOW_IBER, preset, 1e-3, self.sizes.determinism_grid_db, self.cfg,
                mods=self.mods, mc_count=ase_service.MIN_MC_SAMPLES, seed=self.seed,
            )
            return ase_service.curves_to_csv([curve], {"seed": self.seed, **preset.describe()})

        identical = render() == render()
        return [
            AcceptanceCheck(8, "sweep_byte_identical", _status(identical), 0.0 if identical else 1.0, 0.0,
                            "two seeded sweeps compared byte for byte")
        ]


def format_table(checks: list[AcceptanceCheck]) -> str:
    """Plain-text pass/fail table"""
    header = f"{'#':>2}  {'check':<28} {'status':<8} {'measured':>12} {'limit':>12}  detail"
    lines = [header, "-" * len(header)]
    for check in checks:
        lines.append(
            f"{check.criterion:>2}  {check.name:<28} {check.status.value.upper():<8} "
            f"{check.measured:>12.4g} {check.limit:>12.4g}  {check.detail}"
        )
    failed = sum(check.failed for check in checks)
    flagged = sum(check.status is CheckStatus.FLAGGED for check in checks)
    lines.append(f"{len(checks)} checks, {failed} failed, {flagged} flagged")
    return "\n".join(lines) + "\n"
