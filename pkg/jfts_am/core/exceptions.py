"""
Library Exceptions

Every error raised by the solvers and channel services derives from
JftsError so callers (and the CLI exit-code mapping) can catch by family.
"""

from typing import Optional


class JftsError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(JftsError, ValueError):
    """An argument is outside the documented precondition."""


class DomainError(JftsError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class NumericalOverflowError(JftsError, ArithmeticError):
    """A series term overflowed; carries the offending (i, h, t) index."""

    def __init__(self, message: str, index: Optional[tuple[int, int, int]] = None):
        super().__init__(message if index is None else f"{message} at (i, h, t) = {index}")
        self.index = index


class InfeasiblePlanError(JftsError):
    """No plan satisfies the policy constraints."""

    def __init__(self, message: str, kind: Optional[str] = None, mode: Optional[int] = None):
        super().__init__(message)
        self.kind = kind
        self.mode = mode


class ConvergenceError(JftsError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class TruncationWarning(UserWarning):
    """The t = t_max series term is not negligible."""


def invalid_argument_from(exc: Exception) -> InvalidArgumentError:
    """Turn a pydantic ValidationError into the library's argument error."""
    errors = getattr(exc, "errors", None)
    if callable(errors):
        details = "; ".join(
            f"{'.'.join(str(part) for part in err.get('loc', ())) or 'value'}: {err.get('msg')}"
            for err in errors()
        )
        return InvalidArgumentError(details)
    return InvalidArgumentError(str(exc))
