"""Tests for the printed Lambert-W closed forms and their back-substitution."""

import math

import numpy as np
import pytest

from jfts_am.models.enums import PolicyKind
from jfts_am.observability import metrics
from jfts_am.services import closed_forms, jfts_service, policy_service


def _mismatches(equation):
    return metrics.registry.get_sample_value("jfts_formula_mismatch_total", {"equation": equation}) or 0.0


def _domain_errors(source):
    return metrics.registry.get_sample_value("jfts_lambert_w_domain_errors_total", {"source": source}) or 0.0


class TestBackSubstitute:
    def test_adopts_exact_value(self):
        before = _mismatches("eq-test-adopt")
        check = closed_forms.back_substitute("eq-test-adopt", 0, 2.0, lambda v: abs(v - 2.0))
        assert check.adopted
        assert check.residual == 0.0
        assert _mismatches("eq-test-adopt") == before

    def test_mismatch_is_counted(self):
        before = _mismatches("eq-test-mismatch")
        check = closed_forms.back_substitute("eq-test-mismatch", 1, 3.0, lambda v: 0.5)
        assert not check.adopted
        assert check.region == 1
        assert _mismatches("eq-test-mismatch") == before + 1

    def test_domain_errors_skip_substitution(self):
        before = _domain_errors("eq-test-domain")
        calls = []
        check = closed_forms.back_substitute(
            "eq-test-domain", 0, 1.0, lambda v: calls.append(v) or 0.0, domain_errors=2
        )
        assert not check.adopted
        assert check.residual == math.inf
        assert calls == []
        assert _domain_errors("eq-test-domain") == before + 2

    def test_non_finite_value(self):
        check = closed_forms.back_substitute("eq-test-nan", 0, math.nan, lambda v: 0.0)
        assert not check.adopted

    def test_residual_raising_value_error(self):
        def residual(v):
            raise ValueError("outside domain")

        assert not closed_forms.back_substitute("eq-test-raise", 0, 1.0, residual).adopted


class TestKernels:
    def test_expand(self):
        kernels = closed_forms._Kernels(
            w=np.array([0.5, 0.5]),
            B=np.array([1.0, 2.0]),
            t=np.array([0.0, 2.0]),
            log_amplitude=np.zeros(2),
        )
        kernel, u = kernels.expand(1)
        np.testing.assert_array_equal(kernel, [1, 1])
        np.testing.assert_array_equal(u, [1.0, 2.0])
        kernel, u = kernels.expand(0)
        np.testing.assert_array_equal(kernel, [0, 1, 1, 1])
        np.testing.assert_array_equal(u, [0.0, 0.0, 1.0, 2.0])

    def test_of_mixture_drops_negligible_weights(self, coeffs):
        mix = jfts_service.mixture(coeffs, 100.0)
        kernels = closed_forms._Kernels.of(mix)
        assert np.all(kernels.w > closed_forms.WEIGHT_FLOOR)
        assert kernels.w.sum() <= 1.0 + 1e-12


class TestPrintedForms:
    def test_boundary_needs_positive_target(self, coeffs):
        mix = jfts_service.mixture(coeffs, 100.0)
        assert math.isnan(closed_forms.boundary(mix, 16, 1.0, 0.0))
        assert math.isnan(closed_forms.boundary(mix, 16, 1.0, -1e-3))

    def test_boundary_is_finite(self, coeffs):
        mix = jfts_service.mixture(coeffs, 100.0)
        assert isinstance(closed_forms.boundary(mix, 16, 1.0, 1e-3), float)

    def test_power_forms_report_domain_errors(self, coeffs):
        mix = jfts_service.mixture(coeffs, 100.0)
        for value, errors in (
            closed_forms.crate_power(mix, 50.0, 1e-3, 1.0),
            closed_forms.arate_power(mix, 16, 50.0, 1e-3, 1.0),
            closed_forms.spacing_lhs(mix, 4, 16, 50.0, 1e-3, 1.0),
        ):
            assert errors >= 0
            assert math.isnan(value) or errors == 0

    def test_solver_records_checks(self, same_room, numerics, coeffs, link):
        plan = policy_service.solve(
            PolicyKind.ARATE_CPOW_IBER, link, None, same_room, numerics,
            coeffs=coeffs, check_closed_forms=True,
        )
        checks = plan.diagnostics.closed_forms
        assert [c.equation for c in checks] == ["cpow_boundary"] * len(checks)
        assert len(checks) == len(plan.modes)
        assert plan.diagnostics.formula_mismatch_flags == [not c.adopted for c in checks]
        assert plan.diagnostics.residuals["boundary_ber"] <= policy_service.BOUNDARY_TOL

    def test_apow_records_power_and_spacing(self, same_room, numerics, coeffs, link):
        plan = policy_service.solve(
            PolicyKind.ARATE_APOW_IBER, link, None, same_room, numerics,
            coeffs=coeffs, check_closed_forms=True,
        )
        equations = {c.equation for c in plan.diagnostics.closed_forms}
        assert equations == {"apow_power", "apow_spacing"}
        assert len(plan.diagnostics.closed_forms) == 2 * len(plan.modes)
