"""Tests for the four adaptation policies."""

import math

import numpy as np
import pytest

from jfts_am.core.exceptions import InfeasiblePlanError, InvalidArgumentError
from jfts_am.models.enums import IberReading, PolicyKind
from jfts_am.observability import metrics
from jfts_am.schemas.link import LinkBudget, ModulationSet
from jfts_am.services import ase_service, ber_service, closed_forms, jfts_service, policy_service


class TestConstantPowerIber:
    """Tests for adaptive rate at constant power, instantaneous BER."""

    @pytest.fixture
    def plan(self, solved_plans):
        return solved_plans[PolicyKind.ARATE_CPOW_IBER]

    def test_residuals(self, plan):
        residuals = plan.diagnostics.residuals
        assert residuals["average_power"] <= 1e-6
        assert residuals["boundary_ber"] <= 1e-4

    def test_average_power_constraint(self, plan, coeffs):
        P = jfts_service.interval_probability(plan.cutoff, math.inf, plan.link.gamma_bar, coeffs)
        assert plan.powers[0] * P == pytest.approx(plan.link.s_bar, rel=1e-6)

    def test_boundaries_pin_target_ber(self, plan):
        for gamma_l, M, S in zip(plan.boundaries, plan.region_sizes, plan.powers):
            assert ber_service.inst_ber(gamma_l, M, S) == pytest.approx(plan.link.tber, rel=1e-4)

    def test_constant_power_and_increasing_boundaries(self, plan):
        assert not plan.inversion
        assert np.all(plan.powers == plan.powers[0])
        assert np.all(np.diff(plan.boundaries) > 0.0)
        assert plan.modulation.bits[plan.modes[0]] > 0

    def test_tail_reading(self, same_room, numerics, coeffs, link):
        plan = policy_service.solve_arate_cpow_iber(
            link, None, same_room, numerics, coeffs=coeffs,
            reading=IberReading.TAIL, check_closed_forms=False,
        )
        assert plan.reading is IberReading.TAIL
        assert plan.diagnostics.residuals["boundary_ber"] <= 1e-4
        assert all(value <= link.tber * (1.0 + 1e-4) for value in plan.diagnostics.tail_ber)

    def test_target_near_ceiling_opens_every_snr(self, same_room, numerics, coeffs):
        cutoffs = []
        for tber in (0.1, 0.19, 0.1999):
            plan = policy_service.solve_arate_cpow_iber(
                LinkBudget.from_db(20.0, tber), None, same_room, numerics, coeffs=coeffs,
                check_closed_forms=False,
            )
            cutoffs.append(plan.cutoff)
        assert cutoffs == sorted(cutoffs, reverse=True)
        assert cutoffs[-1] < 1e-3
        assert plan.powers[0] == pytest.approx(plan.link.s_bar, rel=1e-3)


class TestConstantPowerAber:
    @pytest.fixture
    def plan(self, solved_plans):
        return solved_plans[PolicyKind.ARATE_CPOW_ABER]

    def test_negative_multiplier(self, plan):
        assert plan.diagnostics.lambda_sign == -1
        assert plan.lam < 0.0
        assert plan.diagnostics.brackets

    def test_average_ber_meets_target(self, plan, coeffs):
        assert ber_service.average_ber(plan, coeffs) == pytest.approx(plan.link.tber, rel=1e-3)

    def test_threshold_above_target(self, plan):
        tau = plan.link.tber - 1.0 / plan.lam
        assert plan.link.tber < tau < 0.2
        for gamma_l, M, S in zip(plan.boundaries, plan.region_sizes, plan.powers):
            assert ber_service.inst_ber(gamma_l, M, S) == pytest.approx(tau, rel=1e-4)

    def test_infinite_multiplier_recovers_iber(self, solved_plans, same_room, numerics, coeffs, link):
        iber = solved_plans[PolicyKind.ARATE_CPOW_IBER]
        ctx = policy_service.make_context(link, None, same_room, numerics, coeffs, check_closed_forms=False)
        lam = 1e12
        limit = policy_service._cpow_plan(ctx, PolicyKind.ARATE_CPOW_ABER, link.tber - 1.0 / lam, lam=lam)
        assert limit.modes == iber.modes
        np.testing.assert_allclose(limit.boundaries, iber.boundaries, rtol=1e-6)
        np.testing.assert_allclose(limit.powers, iber.powers, rtol=1e-6)

    def test_closed_form_boundary_limit(self, coeffs, link):
        mix = jfts_service.mixture(coeffs, link.gamma_bar)
        at_target = closed_forms.boundary(mix, 16, 1.0, link.tber)
        near_target = closed_forms.boundary(mix, 16, 1.0, link.tber - 1e-12)
        assert near_target == pytest.approx(at_target, rel=1e-6, nan_ok=True)


class TestConstantRate:
    @pytest.fixture
    def plan(self, solved_plans):
        return solved_plans[PolicyKind.CRATE_APOW_IBER]

    def test_single_top_mode(self, plan):
        assert plan.inversion
        assert plan.modes == (len(plan.modulation.bits) - 1,)

    def test_inversion_holds_target(self, plan):
        grid = plan.cutoff * np.array([1.0, 1.5, 3.0, 10.0])
        ber = ber_service.inst_ber(grid, plan.modulation.M_max, policy_service.power_profile(plan, grid))
        np.testing.assert_allclose(ber, plan.link.tber, rtol=1e-6)

    def test_power_integral(self, plan, coeffs):
        k = ber_service.kappa(plan.modulation.M_max, plan.link.tber)
        moment = jfts_service.inverse_moment(plan.cutoff, math.inf, plan.link.gamma_bar, coeffs)
        assert k * moment == pytest.approx(1.0, rel=1e-4)

    def test_average_power_residual(self, plan):
        assert plan.diagnostics.residuals["average_power"] <= 1e-4


class TestAdaptiveRateAdaptivePower:
    @pytest.fixture
    def plan(self, solved_plans):
        return solved_plans[PolicyKind.ARATE_APOW_IBER]

    def test_residuals(self, plan):
        residuals = plan.diagnostics.residuals
        assert residuals["average_power"] <= 1e-3
        assert residuals["boundary_ber"] <= 1e-4
        assert residuals["kt_spacing"] <= 1e-9

    def test_positive_multiplier(self, plan):
        assert plan.lam > 0.0
        assert plan.diagnostics.lambda_sign == 1

    def test_spacing_condition(self, plan):
        kappas = plan.powers * plan.boundaries / plan.link.s_bar
        bits = plan.region_bits
        for l in range(1, len(plan.modes)):
            jump = (kappas[l] - kappas[l - 1]) * plan.link.s_bar / plan.boundaries[l]
            assert jump == pytest.approx((bits[l] - bits[l - 1]) / plan.lam, rel=1e-9)

    def test_highest_ase(self, solved_plans, coeffs):
        ase = {kind: ase_service.ase_analytic(plan, coeffs) for kind, plan in solved_plans.items()}
        assert ase[PolicyKind.ARATE_APOW_IBER] >= ase[PolicyKind.ARATE_CPOW_IBER]
        assert ase[PolicyKind.ARATE_APOW_IBER] >= ase[PolicyKind.CRATE_APOW_IBER]

    def test_average_constraint_relaxes(self, solved_plans, coeffs):
        aber = ase_service.ase_analytic(solved_plans[PolicyKind.ARATE_CPOW_ABER], coeffs)
        iber = ase_service.ase_analytic(solved_plans[PolicyKind.ARATE_CPOW_IBER], coeffs)
        assert aber >= iber


class TestDispatch:
    def test_all_off_plan(self, link):
        plan = policy_service.all_off_plan(PolicyKind.ARATE_APOW_IBER, link, reason="nothing fits")
        assert plan.is_all_off
        assert plan.cutoff == math.inf
        assert plan.diagnostics.infeasible_reason == "nothing fits"
        assert policy_service.power_profile(plan, 50.0) == 0.0

    def test_infeasible_becomes_all_off(self, monkeypatch, same_room, numerics, coeffs, link):
        def infeasible(*args, **kwargs):
            raise InfeasiblePlanError("no mass", kind=PolicyKind.ARATE_CPOW_IBER.value)

        monkeypatch.setitem(policy_service.SOLVERS, PolicyKind.ARATE_CPOW_IBER, infeasible)
        plan = policy_service.solve(PolicyKind.ARATE_CPOW_IBER, link, None, same_room, numerics,
                                    coeffs=coeffs, on_infeasible="off")
        assert plan.is_all_off
        assert plan.diagnostics.infeasible_reason == "no mass"
        with pytest.raises(InfeasiblePlanError):
            policy_service.solve(PolicyKind.ARATE_CPOW_IBER, link, None, same_room, numerics,
                                 coeffs=coeffs)

    def test_solve_counts_outcomes(self, same_room, numerics, coeffs):
        labels = {"kind": PolicyKind.CRATE_APOW_IBER.value, "outcome": "solved"}
        before = metrics.registry.get_sample_value("jfts_plan_solves_total", labels) or 0.0
        policy_service.solve(PolicyKind.CRATE_APOW_IBER, LinkBudget.from_db(15.0, 1e-4), None,
                             same_room, numerics, coeffs=coeffs, check_closed_forms=False)
        assert metrics.registry.get_sample_value("jfts_plan_solves_total", labels) == before + 1

    def test_smaller_modulation_set(self, same_room, numerics, coeffs, link):
        mods = ModulationSet(bits=(0, 2, 4))
        plan = policy_service.solve(PolicyKind.ARATE_CPOW_IBER, link, mods, same_room, numerics,
                                    coeffs=coeffs, check_closed_forms=False)
        assert set(plan.region_bits) <= {2.0, 4.0}

    def test_link_must_be_budget(self, same_room, numerics):
        with pytest.raises(InvalidArgumentError):
            policy_service.make_context("20 dB", None, same_room, numerics)


class TestPowerProfile:
    def test_constant_power_regions(self, solved_plans):
        plan = solved_plans[PolicyKind.ARATE_CPOW_IBER]
        gamma = np.array([0.0, 0.5 * plan.cutoff, plan.cutoff, 10.0 * plan.cutoff])
        profile = policy_service.power_profile(plan, gamma)
        np.testing.assert_array_equal(profile[:2], [0.0, 0.0])
        np.testing.assert_allclose(profile[2:], plan.powers[0])

    def test_inversion_regions(self, solved_plans):
        plan = solved_plans[PolicyKind.ARATE_APOW_IBER]
        gamma = plan.boundaries[0] * 1.01
        assert policy_service.power_profile(plan, gamma) == pytest.approx(plan.powers[0] / 1.01)

    def test_negative_snr(self, solved_plans):
        with pytest.raises(InvalidArgumentError):
            policy_service.power_profile(solved_plans[PolicyKind.ARATE_CPOW_IBER], -1.0)


class TestDocument:
    def test_to_document(self, solved_plans):
        plan = solved_plans[PolicyKind.ARATE_APOW_IBER]
        document = policy_service.to_document(plan, {"seed": 7})
        assert document.kind is PolicyKind.ARATE_APOW_IBER
        assert document.power_law == "inversion"
        assert document.modes == [int(b) for b in plan.region_bits]
        assert document.cutoff == pytest.approx(plan.cutoff)
        assert document.lambda_ == pytest.approx(plan.lam)
        assert document.metadata == {"seed": 7}
        assert '"lambda"' in document.to_json()

    def test_all_off_document(self, link):
        document = policy_service.to_document(policy_service.all_off_plan(PolicyKind.ARATE_CPOW_IBER, link))
        assert document.cutoff is None
        assert document.boundaries == []
        assert document.power_law == "constant"
