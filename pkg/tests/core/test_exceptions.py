"""Tests for the library exception hierarchy."""

import pytest
from pydantic import ValidationError

from jfts_am.core.exceptions import (
    ConvergenceError,
    DomainError,
    InfeasiblePlanError,
    InvalidArgumentError,
    JftsError,
    NumericalOverflowError,
    invalid_argument_from,
)
from jfts_am.schemas.link import LinkBudget


class TestHierarchy:
    def test_argument_errors_are_value_errors(self):
        assert issubclass(InvalidArgumentError, ValueError)
        assert issubclass(DomainError, ValueError)
        for cls in (InvalidArgumentError, DomainError, NumericalOverflowError,
                    InfeasiblePlanError, ConvergenceError):
            assert issubclass(cls, JftsError)

    def test_overflow_carries_index(self):
        exc = NumericalOverflowError("term overflowed", index=(1, 2, 3))
        assert exc.index == (1, 2, 3)
        assert "(1, 2, 3)" in str(exc)

    def test_convergence_carries_state(self):
        exc = ConvergenceError("stalled", iterations=12, residual=0.5)
        assert exc.iterations == 12
        assert "iterations=12" in str(exc)

    def test_infeasible_carries_kind(self):
        exc = InfeasiblePlanError("nothing fits", kind="arate_cpow_iber", mode=4)
        assert exc.kind == "arate_cpow_iber"
        assert exc.mode == 4


class TestValidationConversion:
    def test_validation_error_becomes_argument_error(self):
        with pytest.raises(ValidationError) as info:
            LinkBudget(gamma_bar=-1.0, tber=1e-3)
        converted = invalid_argument_from(info.value)
        assert isinstance(converted, InvalidArgumentError)
        assert "gamma_bar" in str(converted)
