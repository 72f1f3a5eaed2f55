"""Tests for the acceptance suite behind `jfts-am verify`."""

import pytest

from jfts_am.models.enums import CheckStatus, PolicyKind
from jfts_am.schemas.results import McReport
from jfts_am.services import verify_service
from jfts_am.services.scenario_service import BUILTIN_PRESETS, WALL_SCENARIOS
from jfts_am.services.verify_service import AcceptanceCheck, AcceptanceSuite


@pytest.fixture
def quick_suite(numerics):
    return AcceptanceSuite(quick=True, cfg=numerics, seed=99)


class TestChecks:
    def test_special_functions(self, quick_suite):
        checks = quick_suite.check_special_functions()
        assert [c.name for c in checks] == ["lambert_w_residual", "hermite_exactness", "upper_gamma_at_zero"]
        assert all(c.status is CheckStatus.PASS for c in checks)

    def test_determinism(self, quick_suite):
        (check,) = quick_suite.check_determinism()
        assert check.status is CheckStatus.PASS
        assert check.criterion == 8

    def test_sizes(self, numerics):
        assert AcceptanceSuite(quick=True, cfg=numerics).sizes is verify_service.QUICK
        assert AcceptanceSuite(cfg=numerics).sizes is verify_service.FULL

    def test_flagged_does_not_fail(self):
        suite = AcceptanceSuite(quick=True)
        suite.checks = [
            AcceptanceCheck(3, "ks_same-room", CheckStatus.FLAGGED, 0.06, 0.05),
            AcceptanceCheck(1, "hermite_exactness", CheckStatus.PASS, 0.0, 1e-10),
        ]
        assert suite.passed
        suite.checks.append(AcceptanceCheck(8, "sweep_byte_identical", CheckStatus.FAIL, 1.0, 0.0))
        assert not suite.passed


class TestFormatTable:
    def test_summary_line(self):
        table = verify_service.format_table([
            AcceptanceCheck(1, "lambert_w_residual", CheckStatus.PASS, 1e-15, 1e-12, "1000 random arguments"),
            AcceptanceCheck(3, "ks_one-wall", CheckStatus.FLAGGED, 0.07, 0.05),
            AcceptanceCheck(6, "ase_analytic_vs_mc", CheckStatus.FAIL, 5.2, 4.0),
        ])
        lines = table.splitlines()
        assert lines[0].split()[:3] == ["#", "check", "status"]
        assert "FLAGGED" in lines[3]
        assert "FAIL" in lines[4]
        assert lines[-1] == "3 checks, 1 failed, 1 flagged"


class TestMcTolerance:
    @pytest.mark.parametrize(
        "estimate, target, rel_tol, stderr, expected",
        [
            (1.005, 1.0, 0.01, 0.001, CheckStatus.PASS),
            (0.995, 1.0, 0.01, 0.0, CheckStatus.PASS),
            (1.01213, 1.0, 0.01, 0.004, CheckStatus.FLAGGED),
            (1.01213, 1.0, 0.01, 0.002, CheckStatus.FAIL),
            (1.2e-3, 1e-3, 0.1, 1e-6, CheckStatus.FAIL),
            (1.2e-3, 1e-3, 0.1, 1e-4, CheckStatus.FLAGGED),
        ],
    )
    def test_status(self, estimate, target, rel_tol, stderr, expected):
        assert verify_service.mc_tolerance_status(estimate, target, rel_tol, stderr) is expected


def _report(mean_power, mean_power_stderr):
    return McReport(
        sample_count=10_000, seed=0, ase=0.0, ase_stderr=0.0,
        mean_power=mean_power, mean_power_stderr=mean_power_stderr,
        mean_ber=0.0, mean_ber_stderr=0.0,
        modes=[0], occupancy=[1.0], occupancy_stderr=[0.0], region_ber=[None],
    )


class TestRedraw:
    """A power estimate outside 1% is re-estimated once with more samples."""

    @pytest.fixture
    def calls(self, monkeypatch):
        made = []
        queued = []

        def fake(plan, params, link, count, seed, stream):
            made.append((count, stream))
            return queued.pop(0)

        monkeypatch.setattr(verify_service.ase_service, "mc_evaluate", fake)
        return made, queued

    def _power_status(self, suite):
        plan, results = suite._plan_cell(
            PolicyKind.CRATE_APOW_IBER, BUILTIN_PRESETS["same-room"], 20.0, 1e-3, 101
        )
        assert plan is not None
        return {name: status for name, status, _, _ in results}["power"]

    def test_within_tolerance_draws_once(self, quick_suite, calls):
        made, queued = calls
        queued.append(_report(1.004, 0.002))
        assert self._power_status(quick_suite) is CheckStatus.PASS
        assert made == [(quick_suite.sizes.mc_samples, 101)]

    @pytest.mark.parametrize(
        "second, expected",
        [
            (_report(1.005, 0.001), CheckStatus.PASS),
            (_report(1.03, 0.001), CheckStatus.FAIL),
            (_report(1.012, 0.004), CheckStatus.FLAGGED),
        ],
    )
    def test_miss_is_redrawn(self, quick_suite, calls, second, expected):
        made, queued = calls
        queued.extend([_report(1.02, 0.001), second])
        assert self._power_status(quick_suite) is expected
        assert made == [
            (quick_suite.sizes.mc_samples, 101),
            (verify_service.ESCALATION_FACTOR * quick_suite.sizes.mc_samples, 101 + 10_000),
        ]


BASE_ASE = {
    PolicyKind.ARATE_APOW_IBER: 5.0,
    PolicyKind.ARATE_CPOW_ABER: 4.5,
    PolicyKind.ARATE_CPOW_IBER: 4.0,
    PolicyKind.CRATE_APOW_IBER: 3.0,
}


class TestOrderingChecks:
    """Classification of the ASE ordering checks on a synthetic table."""

    def _run(self, monkeypatch, suite, rising=(), raised=None):
        raised = raised or {}

        def fake(self, kind, preset, gamma_bar_db, tber):
            wall = WALL_SCENARIOS.index(preset.name)
            step = 0.1 * wall if kind in rising else -0.1 * wall
            value = raised.get(kind, BASE_ASE[kind]) + step
            return value if tber == 1e-3 else value - 1.0

        monkeypatch.setattr(AcceptanceSuite, "_ase", fake)
        return {check.name: check.status for check in suite.check_orderings()}

    def test_consistent_table_passes(self, monkeypatch, quick_suite):
        statuses = self._run(monkeypatch, quick_suite)
        assert set(statuses.values()) == {CheckStatus.PASS}

    def test_constant_rate_rising_with_walls_is_flagged(self, monkeypatch, quick_suite):
        statuses = self._run(monkeypatch, quick_suite, rising=(PolicyKind.CRATE_APOW_IBER,))
        assert statuses["ase_decreases_with_walls"] is CheckStatus.FLAGGED
        assert statuses["apow_highest_ase"] is CheckStatus.PASS

    def test_adaptive_rate_rising_with_walls_fails(self, monkeypatch, quick_suite):
        statuses = self._run(monkeypatch, quick_suite, rising=(PolicyKind.ARATE_CPOW_ABER,))
        assert statuses["ase_decreases_with_walls"] is CheckStatus.FAIL

    def test_adaptive_power_below_average_ber_is_flagged(self, monkeypatch, quick_suite):
        statuses = self._run(monkeypatch, quick_suite, raised={PolicyKind.ARATE_CPOW_ABER: 5.5})
        assert statuses["apow_highest_ase"] is CheckStatus.FLAGGED

    def test_adaptive_power_below_constant_power_fails(self, monkeypatch, quick_suite):
        statuses = self._run(monkeypatch, quick_suite, raised={PolicyKind.ARATE_CPOW_IBER: 5.5})
        assert statuses["apow_highest_ase"] is CheckStatus.FAIL

    def test_stricter_target_above_looser_fails(self, monkeypatch, quick_suite):
        def fake(self, kind, preset, gamma_bar_db, tber):
            return BASE_ASE[kind] if tber == 1e-3 else BASE_ASE[kind] + 0.5

        monkeypatch.setattr(AcceptanceSuite, "_ase", fake)
        statuses = {check.name: check.status for check in quick_suite.check_orderings()}
        assert statuses["looser_tber_higher_ase"] is CheckStatus.FAIL


@pytest.mark.slow
class TestFullRuns:
    def test_quick_suite(self, numerics):
        suite = AcceptanceSuite(quick=True, cfg=numerics)
        checks = suite.run()
        assert {c.criterion for c in checks} == set(range(1, 9))
        assert suite.passed, verify_service.format_table(checks)
